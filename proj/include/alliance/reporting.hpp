#pragma once

#include <string>

#include "alliance/analysis.hpp"
#include "alliance/feedback.hpp"

namespace alliance {

// Line-delimited record and aligned-text renderings for every report kind.
// Both are deterministic functions of the report contents.

std::string consistency_records(const ConsistencyReport& report, const Rubric& rubric);
std::string consistency_text(const ConsistencyReport& report, const Rubric& rubric);

std::string alignment_records(const AlignmentReport& report, const Rubric& rubric);
std::string alignment_text(const AlignmentReport& report, const Rubric& rubric);

std::string distribution_records(const DistributionReport& report, const Rubric& rubric);
std::string distribution_text(const DistributionReport& report, const Rubric& rubric);

std::string experience_records(const ExperienceReport& report, const Rubric& rubric);
std::string experience_text(const ExperienceReport& report, const Rubric& rubric);

std::string phase_records(const PhaseReport& report, const Rubric& rubric);
std::string phase_text(const PhaseReport& report, const Rubric& rubric);

std::string outcome_records(const OutcomeReport& report, const Rubric& rubric);
std::string outcome_text(const OutcomeReport& report, const Rubric& rubric);

std::string assessment_records(const AssessmentSummary& summary);
std::string assessment_text(const AssessmentSummary& summary);

}  // namespace alliance
