#include "msnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace msnet {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(trim(field));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto res = std::from_chars(begin, s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_long(const std::string& s, long long& v) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cli", "cannot read " + path.string());
    return in;
}

std::string hexd(double v) { return detail::hex_double(v); }
double unhex(const std::string& s) { return detail::parse_hex_double(s); }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

SeriesCollection parse_series_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw Error(ErrorCode::EmptyFile, "cli", "no header line");
    if (trim(line) != kSeriesCsvHeader)
        throw Error(ErrorCode::ParseError, "cli", "line " + std::to_string(line_no) + ": expected header '" +
                                                      kSeriesCsvHeader + "'");

    struct Pending {
        std::vector<std::pair<long long, double>> rows;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Pending> pending;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        long long index = 0;
        double value = 0.0;
        if (fields.size() != 3 || fields[0].empty() || !parse_long(fields[1], index) || !parse_double(fields[2], value))
            throw Error(ErrorCode::ParseError, "cli", "line " + std::to_string(line_no) + ": '" + line + "'");
        auto [it, inserted] = pending.try_emplace(fields[0]);
        if (inserted) order.push_back(fields[0]);
        it->second.rows.emplace_back(index, value);
    }
    if (order.empty()) throw Error(ErrorCode::EmptyFile, "cli", "no data rows");

    SeriesCollection out;
    for (const auto& id : order) {
        auto rows = std::move(pending[id].rows);
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        TimeSeries ts{id, Vector(static_cast<Eigen::Index>(rows.size()))};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].first != static_cast<long long>(i))
                throw Error(ErrorCode::NonContiguousIndex, "cli",
                            id + ": expected index " + std::to_string(i) + ", found " + std::to_string(rows[i].first));
            ts.values[static_cast<Eigen::Index>(i)] = rows[i].second;
        }
        out.series.push_back(std::move(ts));
    }
    return out;
}

SeriesCollection ingest_csv(const fs::path& path) {
    auto in = open_input(path);
    return parse_series_csv(in);
}

void write_series_csv(std::ostream& out, const std::vector<TimeSeries>& series) {
    out << kSeriesCsvHeader << '\n';
    for (const auto& s : series)
        for (Eigen::Index i = 0; i < s.values.size(); ++i) out << s.id << ',' << i << ',' << format_double(s.values[i]) << '\n';
}

void write_forecast_csv(std::ostream& out, const ForecastResult& result) {
    out << kForecastCsvHeader << '\n';
    for (const auto& s : result.series)
        for (Eigen::Index h = 0; h < s.forecast.size(); ++h)
            out << s.id << ',' << h + 1 << ',' << format_double(s.forecast[h]) << '\n';
}

std::vector<ForecastRow> read_forecast_csv(const fs::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "cli", path.string() + " is empty");
    if (trim(line) != kForecastCsvHeader)
        throw Error(ErrorCode::ParseError, "cli", "line 1: expected header '" + std::string(kForecastCsvHeader) + "'");
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::pair<long long, double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        long long step = 0;
        double v = 0.0;
        if (f.size() != 3 || !parse_long(f[1], step) || !parse_double(f[2], v))
            throw Error(ErrorCode::ParseError, "cli", "line " + std::to_string(line_no) + ": '" + line + "'");
        auto [it, inserted] = rows.try_emplace(f[0]);
        if (inserted) order.push_back(f[0]);
        it->second.emplace_back(step, v);
    }
    std::vector<ForecastRow> out;
    for (const auto& id : order) {
        auto r = rows[id];
        std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        ForecastRow row{id, Vector(static_cast<Eigen::Index>(r.size()))};
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i].first != static_cast<long long>(i) + 1)
                throw Error(ErrorCode::NonContiguousIndex, "cli", id + ": forecast steps must run 1..M");
            row.values[static_cast<Eigen::Index>(i)] = r[i].second;
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_metrics(std::ostream& out, const MetricsReport& r) {
    out << kMetricsFormatTag << '\n';
    out << "#method\t" << r.method << '\n';
    out << "#epsilon\t" << format_double(r.epsilon) << '\n';
    out << "#season\t" << r.season << '\n';
    out << "#mean_smape\t" << format_double(r.summary.mean_smape) << '\n';
    out << "#median_smape\t" << format_double(r.summary.median_smape) << '\n';
    out << "#mean_mase\t" << format_double(r.summary.mean_mase) << '\n';
    out << "#median_mase\t" << format_double(r.summary.median_mase) << '\n';
    out << "series_id\tsmape\tmase\n";
    for (const auto& e : r.errors) out << e.series_id << '\t' << format_double(e.smape) << '\t' << format_double(e.mase) << '\n';
}

MetricsReport read_metrics(const fs::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsFormatTag)
        throw Error(ErrorCode::ParseError, "cli", path.string() + ": missing metrics format tag");
    MetricsReport r;
    std::size_t line_no = 1;
    bool in_table = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        const auto bad = [&] {
            return Error(ErrorCode::ParseError, "cli", path.string() + " line " + std::to_string(line_no));
        };
        if (!in_table && !f.empty() && !f[0].empty() && f[0][0] == '#') {
            if (f.size() != 2) throw bad();
            const std::string key = f[0].substr(1);
            double v = 0.0;
            if (key == "method") {
                r.method = f[1];
                continue;
            }
            if (!parse_double(f[1], v)) throw bad();
            if (key == "epsilon") r.epsilon = v;
            else if (key == "season") r.season = static_cast<int>(v);
            else if (key == "mean_smape") r.summary.mean_smape = v;
            else if (key == "median_smape") r.summary.median_smape = v;
            else if (key == "mean_mase") r.summary.mean_mase = v;
            else if (key == "median_mase") r.summary.median_mase = v;
            else throw bad();
            continue;
        }
        if (!in_table) {
            if (f.size() != 3 || f[0] != "series_id") throw bad();
            in_table = true;
            continue;
        }
        SeriesError e;
        if (f.size() != 3 || !parse_double(f[1], e.smape) || !parse_double(f[2], e.mase)) throw bad();
        e.series_id = f[0];
        r.errors.push_back(std::move(e));
    }
    if (r.errors.empty()) throw Error(ErrorCode::EmptyInput, "cli", path.string() + " lists no series");
    return r;
}

void write_significance(std::ostream& out, const SignificanceReport& sig, const std::vector<MetricsReport>& reports) {
    out << kSignificanceFormatTag << '\n';
    out << "#friedman_statistic\t" << format_double(sig.friedman_statistic) << '\n';
    out << "#friedman_p\t" << format_double(sig.friedman_p) << '\n';
    out << "#alpha\t" << format_double(kSignificanceLevel) << '\n';
    out << "#control\t" << sig.control_method << '\n';
    out << "method\tmean_smape\tmedian_smape\tmean_mase\tmedian_mase\tavg_rank\tadjusted_p\tsignificant\n";

    std::vector<const MetricsReport*> rows;
    for (const auto& r : reports) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [&](const MetricsReport* a, const MetricsReport* b) {
        const auto key = [&](const MetricsReport* r) {
            return r->method == sig.control_method ? -1.0 : sig.adjusted_p.at(r->method);
        };
        return key(a) < key(b);
    });
    for (const auto* r : rows) {
        const bool control = r->method == sig.control_method;
        out << r->method << '\t' << format_double(r->summary.mean_smape) << '\t'
            << format_double(r->summary.median_smape) << '\t' << format_double(r->summary.mean_mase) << '\t'
            << format_double(r->summary.median_mase) << '\t' << format_double(sig.average_rank.at(r->method)) << '\t';
        if (control) {
            out << "-\tcontrol\n";
        } else {
            const double p = sig.adjusted_p.at(r->method);
            out << format_double(p) << '\t' << (p < kSignificanceLevel ? "yes" : "no") << '\n';
        }
    }
}

void save_model(std::ostream& out, const FittedModel& m) {
    out << kModelFormatTag << '\n';
    out << "paradigm " << to_string(m.spec.paradigm) << '\n';
    out << "decomposer " << to_string(m.spec.decomposer) << '\n';
    out << "mstl " << (m.spec.mstl.periodic ? 1 : 0) << ' ' << m.spec.mstl.seasonal_span << ' '
        << m.spec.mstl.inner_iterations << ' ' << m.spec.mstl.outer_iterations << '\n';
    out << "fourier " << (m.spec.fourier_k1 ? 1 : 0) << ' ' << m.spec.fourier.k_per_period.size();
    for (int k : m.spec.fourier.k_per_period) out << ' ' << k;
    out << '\n';
    out << "periods " << m.periods.size();
    for (int p : m.periods.values()) out << ' ' << p;
    out << '\n';
    out << "horizon " << m.horizon << '\n';
    out << "input_window " << m.input_window << '\n';
    const auto& c = m.config;
    out << "train " << c.cell_dim << ' ' << c.hidden_layers << ' ' << c.mini_batch_size << ' ' << c.epoch_size << ' '
        << c.max_epochs << ' ' << hexd(c.noise_std) << ' ' << hexd(c.l2_weight) << ' ' << c.seed << '\n';
    out << "validation_loss " << hexd(m.validation_loss) << '\n';
    out << "loss_trace " << m.loss_trace.size();
    for (double v : m.loss_trace) out << ' ' << hexd(v);
    out << '\n';
    out << "series " << m.series.size() << '\n';
    for (const auto& s : m.series) {
        if (s.id.find_first_of(" \t\n") != std::string::npos)
            throw Error(ErrorCode::IoError, "cli", "series id '" + s.id + "' contains whitespace");
        out << s.id << ' ' << hexd(s.record.scale) << ' ' << (s.record.shifted ? 1 : 0) << ' ' << hexd(s.final_factor)
            << '\n';
    }
    save_network(out, m.network);
}

FittedModel load_model(std::istream& in) {
    const auto fail = [](const std::string& what) { return Error(ErrorCode::ParseError, "cli", "model bundle: " + what); };
    std::string line;
    if (!std::getline(in, line) || line != kModelFormatTag) throw fail("missing format tag");
    FittedModel m;
    std::string key, word;
    auto expect = [&](const char* k) {
        if (!(in >> key) || key != k) throw fail(std::string("expected '") + k + "'");
    };
    expect("paradigm");
    in >> word;
    m.spec.paradigm = paradigm_from_string(word);
    expect("decomposer");
    in >> word;
    if (word == "none") m.spec.decomposer = DecomposerKind::None;
    else if (word == "mstl") m.spec.decomposer = DecomposerKind::Mstl;
    else if (word == "fourier") m.spec.decomposer = DecomposerKind::Fourier;
    else throw fail("unknown decomposer " + word);
    expect("mstl");
    int periodic = 0;
    in >> periodic >> m.spec.mstl.seasonal_span >> m.spec.mstl.inner_iterations >> m.spec.mstl.outer_iterations;
    m.spec.mstl.periodic = periodic != 0;
    expect("fourier");
    int k1 = 0;
    std::size_t nk = 0;
    in >> k1 >> nk;
    m.spec.fourier_k1 = k1 != 0;
    m.spec.fourier.k_per_period.resize(nk);
    for (auto& k : m.spec.fourier.k_per_period) in >> k;
    expect("periods");
    std::size_t np = 0;
    in >> np;
    std::vector<int> periods(np);
    for (auto& p : periods) in >> p;
    m.periods = SeasonalPeriods(periods);
    expect("horizon");
    in >> m.horizon;
    expect("input_window");
    in >> m.input_window;
    expect("train");
    std::string noise, l2;
    in >> m.config.cell_dim >> m.config.hidden_layers >> m.config.mini_batch_size >> m.config.epoch_size >>
        m.config.max_epochs >> noise >> l2 >> m.config.seed;
    m.config.noise_std = unhex(noise);
    m.config.l2_weight = unhex(l2);
    expect("validation_loss");
    in >> word;
    m.validation_loss = unhex(word);
    expect("loss_trace");
    std::size_t nt = 0;
    in >> nt;
    for (std::size_t i = 0; i < nt; ++i) {
        in >> word;
        m.loss_trace.push_back(unhex(word));
    }
    expect("series");
    std::size_t ns = 0;
    in >> ns;
    for (std::size_t i = 0; i < ns; ++i) {
        SeriesFactors s;
        std::string scale, factor;
        int shifted = 0;
        if (!(in >> s.id >> scale >> shifted >> factor)) throw fail("truncated series table");
        s.record = {unhex(scale), shifted != 0};
        s.final_factor = unhex(factor);
        m.series.push_back(std::move(s));
    }
    if (!in) throw fail("truncated header");
    std::getline(in, line);  // rest of the last header line
    m.network = load_network(in);
    check_spec(m.spec, m.periods);
    return m;
}

FittedModel load_model(const fs::path& path) {
    auto in = open_input(path);
    return load_model(in);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cli", "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "cli", "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace msnet
