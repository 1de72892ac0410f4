#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfm {

/// Outcome of one numbered acceptance check.
struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct CheckOptions {
    std::uint64_t master_seed = 20240501;
    unsigned threads = 1;
    /// Criterion 9 writes its runs below this directory.
    std::filesystem::path scratch_dir = std::filesystem::temp_directory_path() / "mfm-selftest";
};

// Each check runs a fixed experiment and compares it against its threshold.

/// lambda = mu keeps W/V at its initial value on every built-in model.
CriterionResult check_market_copy(const CheckOptions& options = {});
/// Constant weights in the Wright-Fisher market give mean W/V <= 1 + 3 SE.
CriterionResult check_supermartingale(const CheckOptions& options = {});
/// Nested Monte Carlo reproduces the linear-drift closed form 0.7.
CriterionResult check_mu_oracle(const CheckOptions& options = {});
/// Nested Monte Carlo reproduces mu = R in the Wright-Fisher model.
CriterionResult check_martingale_mu(const CheckOptions& options = {});
/// compute_G matches [Z] and the Wright-Fisher closed form, with refinement.
CriterionResult check_g_identity(const CheckOptions& options = {});
/// Constant weights: G keeps growing and W/V decays.
CriterionResult check_extinction(const CheckOptions& options = {});
/// Vanishing perturbation of mu: G plateaus and W/V stays positive.
CriterionResult check_survival(const CheckOptions& options = {});
/// Direct W/V against exp(Z - [Z]/2) converges under dt halving.
CriterionResult check_ito_consistency(const CheckOptions& options = {});
/// Result files are byte-identical across reruns and thread counts.
CriterionResult check_determinism(const CheckOptions& options = {});

/// Criteria 1, 3, 4, 5 and 9.
std::vector<CriterionResult> run_selftest(const CheckOptions& options = {});

/// "[PASS] 3 title (1.2 s): detail"
std::string format_result(const CriterionResult& result);

} // namespace mfm
