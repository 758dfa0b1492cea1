#include <stdio.h>
#include <math.h>
#include "frictionwork.h"

int main(void) {
    FwPoint p = fw_point_default();
    p.n_sites = 3;
    FwEngine *engine = fw_engine_new(1);
    FwReport r;
    FwStatus s = fw_evaluate(engine, &p, FW_SOLVER_EXACT, &r);
    if (s != FW_STATUS_OK) {
        fprintf(stderr, "evaluate: %s\n", fw_last_error());
        return 1;
    }
    if (fabs(r.w_fric - (r.w_tau - r.w_a)) > 1e-12 || r.w_fric < 0.0) {
        return 2;
    }
    s = fw_evaluate(NULL, &p, FW_SOLVER_EXACT, &r);
    if (s != FW_STATUS_NULL_POINTER) {
        return 3;
    }
    fw_engine_free(engine);
    printf("w_fric %.6e\n", r.w_fric);
    return 0;
}
