#pragma once

// Pinned thresholds of the acceptance suite.
namespace lmor::acceptance {

inline constexpr double splitting_improved_agreement = 1e-9;
inline constexpr double splitting_trad_deviation = 1e-3;
inline constexpr double splitting_trad_level = 1e-6;
inline constexpr double splitting_seconds = 300;

inline constexpr double svals_rel = 0.05;
inline constexpr double rangefinder_seconds = 600;

inline constexpr double paper_median_effectivity = 29.2;
inline constexpr double effectivity_band = 0.5;

inline constexpr double reference_c_pu_sq = 3.6013e7;
inline constexpr double reference_one_minus_c = 1.714e-10;
inline constexpr double reference_rel = 1e-3;

inline constexpr double wirebasket_rel = 1e-10;

inline constexpr double monotone_slack = 1e-12;
inline constexpr double chungend_rel = 1e-8;
inline constexpr double dominance_slack = 1e-9;
inline constexpr double contraction_slack = 1e-10;
inline constexpr double enrichment_seconds = 600;

inline constexpr double channels_rel_error = 5e-3;
inline constexpr double invalid_fraction = 0.10;
inline constexpr double channels_seconds = 900;

inline constexpr double gs_adaptive = 1e-12;
inline constexpr double gs_gram_min = 1e-6;
inline constexpr double gs_reiterated = 1e-11;
inline constexpr double gs_median_iterations = 4;

inline constexpr double boundary_equality = 1e-12;

inline constexpr double plateau_slack = 2;

}  // namespace lmor::acceptance
