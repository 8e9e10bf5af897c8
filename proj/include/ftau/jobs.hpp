#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ftau {

enum class JobCommand { radial, expand, verify, theorem2 };
enum class OutputFormat { csv, json };

struct JobConfig {
    JobCommand command = JobCommand::radial;
    double tau = 0.0;
    int n = 3;
    double C0 = 0.0;
    double c = 0.0;
    double c0 = 0.0;
    std::optional<int> branch; // 1-based position in the branch catalog; default: tagged branch
    int J = 3;
    std::pair<double, double> r_range{2.0, 100.0};
    int samples = 40;
    std::string output_path; // empty: render to stdout
    OutputFormat format = OutputFormat::csv;
    double tolerance_scale = 1.0;
    double perturb = 0.0; // verify: relative tail-coefficient injection (negative control)
};

struct JobResult {
    bool pass = true;
    int exit_code = 0; // 0 pass, 1 verification failed, 2 invalid input, 3 numerical failure
    std::string output_path;
    std::string message;
    std::string payload; // rendered table / summary / error object
};

// Parse a single config object or an array of them.
std::vector<JobConfig> parse_configs(const std::string& json_text);

JobResult run_job(const JobConfig& cfg);

// Fan a job array over a worker pool; results come back in input order.
std::vector<JobResult> run_jobs(const std::vector<JobConfig>& cfgs, int workers);

// Worst exit code of a batch.
int batch_exit_code(const std::vector<JobResult>& results);

} // namespace ftau
