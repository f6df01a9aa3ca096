#include <math.h>
#include <stdio.h>
#include "sphcoh.h"

int main(void) {
    SphcohParams *params = NULL;
    SphcohComplex value;
    SphcohComplex theta = {0.3, 0.1};
    char msg[256];
    if (sphcoh_params_dimensionless(2, 0.5, &params) != SPHCOH_STATUS_OK) return 1;
    if (sphcoh_rho(2, sphcoh_params_tau(params), theta, &value) != SPHCOH_STATUS_OK) return 1;
    if (sphcoh_nu(9, 0.5, 1.0, &value.re) != SPHCOH_STATUS_UNSUPPORTED_DIMENSION) return 1;
    sphcoh_last_error_message(msg, sizeof msg);
    printf("%s %s\n", sphcoh_version(), msg);
    sphcoh_params_free(params);
    return 0;
}
