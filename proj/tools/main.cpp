#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftau/errors.hpp"
#include "ftau/jobs.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ftau: exterior radial solutions, asymptotic expansions, and verification "
                 "for the five-case operator family"};
    std::string config_path, out_override, format_override;
    int jobs = 1;
    double tol_scale = 1.0;
    app.add_option("--config", config_path, "JSON job config file (object or array)")->required();
    app.add_option("--out", out_override, "Override output path (single-job configs only)");
    app.add_option("--format", format_override, "Override output format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", jobs, "Worker threads for job arrays")->default_val(1);
    app.add_option("--tolerance-scale", tol_scale, "Multiply verification tolerances")
        ->default_val(1.0);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string text;
    {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) {
            std::cout << "{\n  \"error\": {\n    \"kind\": \"domain\",\n    \"message\": "
                         "\"cannot read config file\",\n    \"exit_code\": 2\n  }\n}\n";
            return 2;
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }

    std::vector<ftau::JobConfig> cfgs;
    try {
        cfgs = ftau::parse_configs(text);
        if (!out_override.empty()) {
            if (cfgs.size() != 1)
                throw ftau::domain_error("--out applies to single-job configs only");
            cfgs[0].output_path = out_override;
        }
        for (auto& c : cfgs) {
            if (!format_override.empty())
                c.format = format_override == "csv" ? ftau::OutputFormat::csv
                                                    : ftau::OutputFormat::json;
            c.tolerance_scale *= tol_scale;
        }
    } catch (const ftau::error& e) {
        std::cout << "{\n  \"error\": {\n    \"kind\": \"domain\",\n    \"message\": "
                  << nlohmann::json(std::string(e.what())).dump()
                  << ",\n    \"exit_code\": 2\n  }\n}\n";
        return 2;
    }

    auto results = ftau::run_jobs(cfgs, jobs);
    for (const auto& r : results)
        if (r.output_path.empty() || !r.pass) std::cout << r.payload;
    return ftau::batch_exit_code(results);
}
