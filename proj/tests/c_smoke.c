/* Builds against the public header as plain C and runs a short pipeline. */
#include <math.h>
#include <stdio.h>

#include "subid/subid.h"

#define TRY(call)                                                                   \
  do {                                                                              \
    subid_status s_ = (call);                                                       \
    if (s_ != SUBID_OK) {                                                           \
      fprintf(stderr, "%s failed: %s (%s)\n", #call, subid_status_name(s_),         \
              subid_last_error());                                                  \
      return 1;                                                                     \
    }                                                                               \
  } while (0)

int main(void) {
  subid_model* m = NULL;
  subid_trajectory* t = NULL;
  subid_identification* id = NULL;
  subid_identify_options opt = subid_identify_options_default();
  double re = 0.0, im = 0.0;

  TRY(subid_model_from_armax(-0.7, 1.0, 0.5, 4.0, &m));
  TRY(subid_simulate(m, 3000, SUBID_INPUT_WHITE, 1.0, 5, &t));
  TRY(subid_identify(t, &opt, &id));
  TRY(subid_identification_eigenvalues(id, &re, &im));
  subid_identification_free(id);
  subid_trajectory_free(t);
  subid_model_free(m);
  if (fabs(re - 0.7) > 0.1 || im != 0.0) {
    fprintf(stderr, "pole %g out of range\n", re);
    return 1;
  }
  printf("pole %.4f\n", re);
  return 0;
}
