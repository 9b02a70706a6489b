#pragma once

#include <string>
#include <vector>

namespace larpo {

// One named assertion with its observed error and the tolerance it was held
// to. `observed <= tolerance` iff pass (up to the note's stated convention).
struct CheckItem {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct CheckFamily {
  std::string name;
  bool pass = false;
  std::vector<CheckItem> items;
};

struct CheckReport {
  bool pass = false;
  std::vector<CheckFamily> families;
};

// Negative-control hooks: deliberately corrupt one computation so the suite's
// ability to catch real defects is itself testable. Never set outside tests.
struct CheckHooks {
  bool corrupt_pair_sign = false;  // flips the pair loss's analytic gradient
};

// The full invariant suite, deterministic and self-contained:
//   gradient_fidelity     analytic vs central finite differences, all losses
//   reduction_identities  contrastive/lambdarank/listmle at m=2 equal pair
//   plackett_luce         exp(-listmle) enumerates order probabilities
//   z_cancellation        ranking probabilities invariant to gamma shifts
//   normalization         prob tables sum to 1; exp(-loss) equals probability
//   closed_form_spots     equal-gamma losses hit ln 2 / 3 ln 2 / ln 6 / ln 4
//   recall_mc             closed form vs Monte-Carlo, monotone in N
//   temperature_crossover low t wins recall@1, high t wins recall@50
CheckReport run_all_checks(const CheckHooks& hooks = {});

std::string check_report_json(const CheckReport& report);

}  // namespace larpo
