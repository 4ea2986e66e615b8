#include <math.h>
#include <stdio.h>
#include <string.h>

#include "eaas_compose.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        EaasStatus status_ = (call);                                         \
        if (status_ != EAAS_STATUS_OK) {                                     \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)status_,     \
                    eaas_last_error());                                      \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    EaasInstance *instance = NULL;
    CHECK(eaas_instance_new("es-1", "provider", 100.0, 0.0, 0.0, 600, 720, &instance));
    CHECK(eaas_instance_add_request(instance, "er-1", "c1", 50.0, 40.0, 600, 630, 1.0, 1.0));
    CHECK(eaas_instance_add_request(instance, "er-2", "c2", 10.0, 30.0, 640, 660, 1.0, 2.0));

    EaasConstants *constants = eaas_constants_default();
    EaasPlan *plan = NULL;
    CHECK(eaas_compose(instance, constants, EAAS_ALGORITHM_IB, 20, &plan));

    if (eaas_plan_len(plan) != 2 || strcmp(eaas_plan_request_id(plan, 0), "er-1") != 0) {
        fprintf(stderr, "unexpected plan\n");
        return 1;
    }
    if (fabs(eaas_plan_remaining_energy(plan) - 30.0) > 1e-9) {
        fprintf(stderr, "unexpected remaining energy\n");
        return 1;
    }
    char *json = eaas_plan_to_json(plan);
    printf("%s\n", json);
    eaas_string_free(json);

    EaasPlan *bad = NULL;
    if (eaas_compose(NULL, constants, EAAS_ALGORITHM_IB, 20, &bad) != EAAS_STATUS_NULL_POINTER) {
        fprintf(stderr, "null instance accepted\n");
        return 1;
    }

    eaas_plan_free(plan);
    eaas_constants_free(constants);
    eaas_instance_free(instance);
    return 0;
}
