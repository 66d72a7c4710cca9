#include <math.h>
#include <stdio.h>
#include "stlmc.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        StlmcStatus s_ = (call);                                           \
        if (s_ != STLMC_STATUS_OK) {                                       \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,        \
                    stlmc_last_error());                                   \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const char *json =
        "{\"dim\":1,\"weights\":[0.5,0.5],\"centers\":[[-3.0],[3.0]],"
        "\"base\":{\"kind\":\"isotropic-gaussian\",\"sigma\":1.0}}";
    StlmcTarget *t = NULL;
    StlmcLadder *l = NULL;
    CHECK(stlmc_target_from_json(json, &t));

    double x = 0.0, v = 0.0, g = 1.0;
    CHECK(stlmc_target_value(t, &x, 1, &v));
    CHECK(stlmc_target_grad(t, &x, 1, &g));
    if (fabs(v - 4.5) > 1e-12 || fabs(g) > 1e-12) {
        fprintf(stderr, "f(0) = %g, f'(0) = %g\n", v, g);
        return 1;
    }

    CHECK(stlmc_ladder_geometric(0.1, 2.0, &l));
    size_t levels = 0;
    CHECK(stlmc_ladder_len(l, &levels));
    StlmcRunParams p = {1.0, 0.05, 10.0, 3.0};
    double samples[8];
    CHECK(stlmc_sample(t, l, &p, 42, 8, samples, 8));

    double bad = 0.0;
    if (stlmc_target_value(t, samples, 2, &bad) != STLMC_STATUS_DIMENSION_MISMATCH) {
        fprintf(stderr, "expected a dimension mismatch\n");
        return 1;
    }
    printf("levels=%zu first=%.6f\n", levels, samples[0]);
    stlmc_ladder_free(l);
    stlmc_target_free(t);
    return 0;
}
