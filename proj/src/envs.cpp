#include "banditiv/envs.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace banditiv {

Round gen_synth_round(const SyntheticSpec& s, Rng& rng) {
    const auto& dims = s.spec.dims;
    const auto& m = s.spec.model;
    const int n = dims.n_arms;
    const int k = dims.k;
    const int d = dims.d;

    std::uniform_real_distribution<double> unif(s.z_low, s.z_high);
    Round r;
    r.instruments.resize(n, k);
    r.features.resize(n, d);
    r.rewards.resize(n);
    Vec means(n);
    const Vec reduced_form = m.gamma0 * m.beta0;
    Vec e(d), u(d);
    for (int a = 0; a < n; ++a) {
        for (int j = 0; j < k; ++j) r.instruments(a, j) = unif(rng);
        for (int j = 0; j < d; ++j) e(j) = m.sigma_e * standard_normal(rng);
        for (int j = 0; j < d; ++j) u(j) = m.sigma_u * standard_normal(rng);
        const double eps = m.sigma_eps * standard_normal(rng);
        const Vec z = r.instruments.row(a).transpose();
        const Vec x = m.gamma0.transpose() * z + e + u;
        r.features.row(a) = x.transpose();
        r.rewards(a) = x.dot(m.beta0) + e.dot(m.rho) + eps;
        means(a) = z.dot(reduced_form);
    }
    r.mean_rewards = std::move(means);
    return r;
}

std::pair<int, double> oracle_best(const Round& round) {
    if (!round.mean_rewards) throw EnvironmentError("oracle_best: round has no ground-truth means");
    const Vec& m = *round.mean_rewards;
    if (m.size() == 0) throw EnvironmentError("oracle_best: empty arm set");
    int best = 0;
    for (Index a = 1; a < m.size(); ++a) {
        if (m(a) > m(best)) best = static_cast<int>(a);
    }
    return {best, m(best)};
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& impression_columns() {
    static const std::vector<std::string> cols = {"paying_price", "bidding_price", "slot_width", "slot_height",
                                                  "slot_visibility"};
    return cols;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

ImpressionLog parse_impressions(const std::string& text) {
    ImpressionLog log;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;

    // Header.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty()) {
        log.warnings.push_back("impression file is empty");
        return log;
    }
    if (!header.empty() && header[0].size() >= 3 && static_cast<unsigned char>(header[0][0]) == 0xEF) {
        header[0] = header[0].substr(3);  // UTF-8 BOM
    }

    const auto& required = impression_columns();
    std::vector<int> col_index(required.size(), -1);
    for (std::size_t c = 0; c < required.size(); ++c) {
        const auto it = std::find(header.begin(), header.end(), required[c]);
        if (it == header.end()) throw DataError("impression file is missing required column '" + required[c] + "'");
        col_index[c] = static_cast<int>(it - header.begin());
    }
    for (const auto& h : header) {
        if (std::find(required.begin(), required.end(), h) == required.end()) {
            log.warnings.push_back("ignoring extra column '" + h + "'");
        }
    }

    std::vector<std::array<double, 5>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "expected " << header.size() << " fields, found " << cells.size();
            log.errors.push_back({line_no, os.str()});
            continue;
        }
        std::array<double, 5> v{};
        bool ok = true;
        for (std::size_t c = 0; c < required.size(); ++c) {
            const auto& cell = cells[static_cast<std::size_t>(col_index[c])];
            if (!parse_double(cell, v[c])) {
                log.errors.push_back({line_no, "column '" + required[c] + "': not a finite number: '" + cell + "'"});
                ok = false;
                break;
            }
        }
        if (ok && v[0] < 0) {
            log.errors.push_back({line_no, "paying_price must be nonnegative"});
            ok = false;
        }
        if (ok) rows.push_back(v);
    }
    if (rows.empty()) {
        log.warnings.push_back("impression file has no valid rows");
        return log;
    }

    // z-score the slot columns over the file.
    constexpr int first_slot = 2;
    constexpr int n_slot = 3;
    std::array<double, n_slot> mean{}, sd{};
    const double n = static_cast<double>(rows.size());
    for (int j = 0; j < n_slot; ++j) {
        double s = 0.0;
        for (const auto& r : rows) s += r[first_slot + j];
        mean[j] = s / n;
        double ss = 0.0;
        for (const auto& r : rows) ss += (r[first_slot + j] - mean[j]) * (r[first_slot + j] - mean[j]);
        sd[j] = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    log.records.reserve(rows.size());
    for (const auto& r : rows) {
        ImpressionRecord rec;
        rec.paying_price = r[0];
        rec.bidding_price = r[1];
        rec.slot_features.resize(n_slot);
        for (int j = 0; j < n_slot; ++j) {
            rec.slot_features[j] = sd[j] > 0 ? (r[first_slot + j] - mean[j]) / sd[j] : 0.0;
        }
        log.records.push_back(std::move(rec));
    }
    return log;
}

ImpressionLog load_impressions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open impression file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_impressions(buf.str());
}

void RtbSpec::check() const {
    if (bid_grid.size() < 2) throw ConfigError("bid grid needs at least two bids");
    for (std::size_t i = 1; i < bid_grid.size(); ++i) {
        if (!(bid_grid[i] > bid_grid[i - 1])) throw ConfigError("bid grid must be strictly increasing");
    }
    if (!(shock_scale > 0)) throw ConfigError("shock_scale must be positive");
    if (noise_sd < 0) throw ConfigError("noise_sd must be nonnegative");
}

Vec RtbSpec::beta() const {
    Vec b(2);
    b << beta_basic, beta_ate;
    return b;
}

std::vector<double> default_bid_grid(const std::vector<ImpressionRecord>& records, int n) {
    if (n < 2) throw ConfigError("need at least two bids");
    if (records.empty()) throw DataError("cannot derive a bid grid from an empty impression log");
    std::vector<double> prices;
    prices.reserve(records.size());
    for (const auto& r : records) prices.push_back(r.paying_price);
    std::sort(prices.begin(), prices.end());
    std::vector<double> grid;
    const double m = static_cast<double>(prices.size() - 1);
    for (int i = 1; i <= n; ++i) {
        const double h = m * static_cast<double>(i) / static_cast<double>(n + 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, prices.size() - 1);
        grid.push_back(prices[lo] + (h - static_cast<double>(lo)) * (prices[hi] - prices[lo]));
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ConfigError("paying-price quantiles are not distinct; use fewer bids");
        }
    }
    return grid;
}

int rtb_instrument_dim(const ImpressionRecord& imp) { return static_cast<int>(imp.slot_features.size()) + 3; }

RtbDraw gen_rtb_draw(const ImpressionRecord& imp, const RtbSpec& spec, Rng& rng) {
    if (spec.bid_grid.empty()) throw ConfigError("bid grid is empty");
    const int n = static_cast<int>(spec.bid_grid.size());
    const int k = rtb_instrument_dim(imp);
    const int n_slot = static_cast<int>(imp.slot_features.size());

    RtbDraw draw;
    draw.shock = spec.shock_scale * standard_normal(rng);
    draw.competitor_price = imp.paying_price + spec.competitor_response * draw.shock;

    Round& r = draw.round;
    r.instruments.resize(n, k);
    r.features.resize(n, 2);
    r.rewards.resize(n);
    Vec means(n);
    for (int a = 0; a < n; ++a) {
        const double bid = spec.bid_grid[static_cast<std::size_t>(a)];
        const double exposure = bid >= draw.competitor_price ? 1.0 : 0.0;
        r.instruments(a, 0) = 1.0;
        for (int j = 0; j < n_slot; ++j) r.instruments(a, 1 + j) = imp.slot_features[static_cast<std::size_t>(j)];
        r.instruments(a, 1 + n_slot) = bid;
        r.instruments(a, 2 + n_slot) = imp.paying_price;
        r.features(a, 0) = 1.0;
        r.features(a, 1) = exposure;
        const double eps = spec.noise_sd * standard_normal(rng);
        r.rewards(a) = spec.beta_basic + spec.beta_ate * exposure + spec.rho * draw.shock + eps;
        means(a) = spec.beta_basic + (spec.beta_ate - draw.competitor_price) * exposure;
    }
    r.mean_rewards = std::move(means);
    return draw;
}

Round gen_rtb_round(const ImpressionRecord& imp, const RtbSpec& spec, Rng& rng) {
    return gen_rtb_draw(imp, spec, rng).round;
}

}  // namespace banditiv
