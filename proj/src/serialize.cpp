#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tsar/errors.hpp"
#include "tsar/model.hpp"

namespace tsar {

namespace {

constexpr int kFormatVersion = 1;

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string checksum_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

json score_to_json(double s) {
    if (std::isfinite(s)) return s;
    return "inf";
}

double score_from_json(const json& j) {
    if (j.is_string()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json report_to_json(const SearchReport& report) {
    json evals = json::array();
    for (const auto& [cursor, score] : report.evaluations)
        evals.push_back({{"cursor", cursor}, {"score", score_to_json(score)}});
    return {{"chosen", report.chosen},
            {"chosen_values", report.chosen_values},
            {"rounds", report.rounds},
            {"evaluations", evals}};
}

SearchReport report_from_json(const json& j) {
    SearchReport report;
    report.chosen = j.at("chosen").get<std::vector<std::size_t>>();
    report.chosen_values = j.at("chosen_values").get<std::vector<double>>();
    report.rounds = j.at("rounds").get<std::size_t>();
    for (const auto& e : j.at("evaluations"))
        report.evaluations.emplace(e.at("cursor").get<std::vector<std::size_t>>(),
                                   score_from_json(e.at("score")));
    return report;
}

json baseline_to_json(const BaselineModel& b) {
    return {{"k_trend", b.counts.trend},
            {"k_day", b.counts.day},
            {"k_week", b.counts.week},
            {"k_year", b.counts.year},
            {"p_day", b.periods.day},
            {"p_week", b.periods.week},
            {"p_year", b.periods.year},
            {"alpha0", b.alpha0},
            {"beta0", b.beta0},
            {"day_sin", b.day_sin},
            {"day_cos", b.day_cos},
            {"week_sin", b.week_sin},
            {"week_cos", b.week_cos},
            {"year_sin", b.year_sin},
            {"year_cos", b.year_cos}};
}

BaselineModel baseline_from_json(const json& j) {
    BaselineModel b;
    b.counts = {j.at("k_trend").get<int>(), j.at("k_day").get<int>(), j.at("k_week").get<int>(),
                j.at("k_year").get<int>()};
    b.periods = {j.at("p_day").get<double>(), j.at("p_week").get<double>(),
                 j.at("p_year").get<double>()};
    b.alpha0 = j.at("alpha0").get<double>();
    b.beta0 = j.at("beta0").get<double>();
    b.day_sin = j.at("day_sin").get<std::vector<double>>();
    b.day_cos = j.at("day_cos").get<std::vector<double>>();
    b.week_sin = j.at("week_sin").get<std::vector<double>>();
    b.week_cos = j.at("week_cos").get<std::vector<double>>();
    b.year_sin = j.at("year_sin").get<std::vector<double>>();
    b.year_cos = j.at("year_cos").get<std::vector<double>>();
    return b;
}

json correlations_to_json(const LaggedCorrelations& corr) {
    auto raw = corr.raw();
    return {{"components", corr.components()},
            {"span", corr.span()},
            {"values", std::vector<double>(raw.begin(), raw.end())}};
}

LaggedCorrelations correlations_from_json(const json& j) {
    LaggedCorrelations corr(j.at("components").get<std::size_t>(), j.at("span").get<std::size_t>());
    auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != corr.raw().size()) throw SerializationError("correlation size mismatch");
    std::copy(values.begin(), values.end(), corr.raw().begin());
    return corr;
}

}  // namespace

std::string save_model(const TsarModel& model) {
    json dirs_vectors = json::array();
    for (const auto& v : model.kernel.directions().vectors)
        dirs_vectors.push_back(std::vector<double>(v.data(), v.data() + v.size()));

    json baselines = json::array();
    for (const auto& b : model.baselines) baselines.push_back(baseline_to_json(b));

    json baseline_reports = json::array();
    for (const auto& r : model.baseline_reports) baseline_reports.push_back(report_to_json(r));

    json payload = {
        {"grid",
         {{"origin", model.grid.origin}, {"step", model.grid.step}, {"length", model.grid.length}}},
        {"columns", model.columns},
        {"past", model.past},
        {"future", model.future},
        {"baselines", baselines},
        {"sigma", model.normalizer.sigma},
        {"correlations", correlations_to_json(model.correlations)},
        {"kernel",
         {{"rank", model.kernel.rank()},
          {"eigenvalues", model.kernel.directions().eigenvalues},
          {"directions", dirs_vectors},
          {"sigma_lr", correlations_to_json(model.kernel.sigma_lr())},
          {"dbar", model.kernel.dbar()}}},
        {"rank", model.rank},
        {"lambda", model.lambda},
        {"baseline_reports", baseline_reports},
        {"gp_report", model.gp_report ? report_to_json(*model.gp_report) : json(nullptr)}};

    std::string payload_text = payload.dump();
    json doc = {{"format", "tsar-model"},
                {"format_version", kFormatVersion},
                {"checksum", checksum_hex(payload_text)},
                {"payload", payload}};
    return doc.dump(2);
}

TsarModel load_model(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw SerializationError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "tsar-model")
            throw SerializationError("not a tsar model file");
        int version = doc.at("format_version").get<int>();
        if (version > kFormatVersion)
            throw SerializationError("unsupported model format version " +
                                     std::to_string(version));
        std::string payload_text = doc.at("payload").dump();
        if (checksum_hex(payload_text) != doc.at("checksum").get<std::string>())
            throw SerializationError("model payload checksum mismatch: file is corrupt");

        const json& payload = doc.at("payload");
        TsarModel model;
        model.grid.origin = payload.at("grid").at("origin").get<std::int64_t>();
        model.grid.step = payload.at("grid").at("step").get<std::int64_t>();
        model.grid.length = payload.at("grid").at("length").get<std::size_t>();
        model.columns = payload.at("columns").get<std::vector<std::string>>();
        model.past = payload.at("past").get<std::size_t>();
        model.future = payload.at("future").get<std::size_t>();
        for (const auto& b : payload.at("baselines"))
            model.baselines.push_back(baseline_from_json(b));
        model.normalizer.sigma = payload.at("sigma").get<std::vector<double>>();
        model.correlations = correlations_from_json(payload.at("correlations"));

        const json& kj = payload.at("kernel");
        PrincipalDirections dirs;
        dirs.eigenvalues = kj.at("eigenvalues").get<std::vector<double>>();
        for (const auto& vj : kj.at("directions")) {
            auto values = vj.get<std::vector<double>>();
            Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
            for (std::size_t i = 0; i < values.size(); ++i)
                v[static_cast<Eigen::Index>(i)] = values[i];
            dirs.vectors.push_back(std::move(v));
        }
        model.kernel = make_lowrank_kernel(
            model.columns.size(), model.past + model.future, std::move(dirs),
            correlations_from_json(kj.at("sigma_lr")),
            kj.at("dbar").get<std::vector<std::vector<double>>>());

        model.rank = payload.at("rank").get<std::size_t>();
        model.lambda = payload.at("lambda").get<double>();
        for (const auto& r : payload.at("baseline_reports"))
            model.baseline_reports.push_back(report_from_json(r));
        if (!payload.at("gp_report").is_null())
            model.gp_report = report_from_json(payload.at("gp_report"));

        const std::size_t m = model.columns.size();
        if (model.past < 1 || model.future < 1 || model.grid.step <= 0 ||
            model.baselines.size() != m || model.normalizer.sigma.size() != m ||
            model.correlations.components() != m ||
            model.correlations.span() != model.past + model.future)
            throw SerializationError("model payload fields are inconsistent");
        return model;
    } catch (const json::exception& e) {
        throw SerializationError(std::string("malformed model payload: ") + e.what());
    }
}

void save_model_file(const std::string& path, const TsarModel& model) {
    // Write to a sibling temp file first so readers never see a torn file.
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << save_model(model);
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

TsarModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_model(buffer.str());
}

}  // namespace tsar
