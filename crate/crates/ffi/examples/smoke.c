#include <stdio.h>
#include "qploss.h"

int main(void) {
    QplMaterial *ta = NULL;
    if (qpl_material_new("Ta", 4.06, 6.9e28, 1.0e7, QPL_GAP_MODEL_TANH_INTERPOLATION, &ta) != QPL_STATUS_OK) {
        fprintf(stderr, "%s\n", qpl_last_error_message());
        return 1;
    }
    double n = 0.0;
    qpl_nqp_thermal(ta, 1.0, &n);
    printf("qploss %s: n_qp(Ta, 1 K) = %.4e um^-3\n", qpl_version(), n);
    if (qpl_nqp_thermal(ta, 3.0, &n) != QPL_STATUS_DOMAIN) return 1;
    printf("expected error: %s\n", qpl_last_error_message());
    qpl_material_free(ta);
    return 0;
}
