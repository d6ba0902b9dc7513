#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "banditiv/model.hpp"
#include "banditiv/rng.hpp"

namespace banditiv {

// ---------------------------------------------------------------------------
// Synthetic endogenous DGP
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    ModelSpec spec;
    double z_low = -3.0;
    double z_high = 3.0;
};

/// n_arms rows: z ~ U[z_low, z_high]^k, e ~ N(0, sigma_e^2 I_d), u ~ N(0, sigma_u^2 I_d),
/// x = Gamma0' z + e + u, y = x' beta0 + e' rho + eps.
Round gen_synth_round(const SyntheticSpec& spec, Rng& rng);

/// Best arm by noiseless mean, lowest index on ties.
std::pair<int, double> oracle_best(const Round& round);

// ---------------------------------------------------------------------------
// Real-time bidding replay
// ---------------------------------------------------------------------------

struct ImpressionRecord {
    std::vector<double> slot_features;  // z-scored over the file
    double bidding_price = 0.0;
    double paying_price = 0.0;
};

struct RowError {
    long line = 0;
    std::string message;
};

struct ImpressionLog {
    std::vector<ImpressionRecord> records;
    std::vector<RowError> errors;
    std::vector<std::string> warnings;
};

// Required header columns, in schema order.
const std::vector<std::string>& impression_columns();

/// Parses an impression CSV. Missing required columns throw DataError naming the
/// column; unparsable rows are reported in `errors` with their line number.
ImpressionLog load_impressions(const std::filesystem::path& path);
ImpressionLog parse_impressions(const std::string& text);

struct RtbSpec {
    std::vector<double> bid_grid;     // strictly increasing
    double beta_basic = 1.0;          // intercept revenue
    double beta_ate = 8.0;            // effect of exposure
    double rho = 2.0;                 // endogeneity degree
    double shock_scale = 1.0;         // sd of the common market shock
    double competitor_response = 1.0; // c in: effective competitor price = paying price + c * shock
    double noise_sd = 1.0;            // sd of the idiosyncratic revenue noise

    void check() const;
    [[nodiscard]] Vec beta() const;   // (beta_basic, beta_ate)
};

/// n equally spaced quantiles (levels i/(n+1)) of the paying-price column.
std::vector<double> default_bid_grid(const std::vector<ImpressionRecord>& records, int n);

/// Instrument dimension of an RTB round: intercept, slot features, bid, logged price.
int rtb_instrument_dim(const ImpressionRecord& imp);

/// Draws the common shock and builds one auction round over the bid grid. Arms are
/// bids; x = (1, exposure), z = (1, slot features, bid, logged paying price).
Round gen_rtb_round(const ImpressionRecord& imp, const RtbSpec& spec, Rng& rng);

// Details of one generated auction, for validation studies.
struct RtbDraw {
    Round round;
    double shock = 0.0;
    double competitor_price = 0.0;
};
RtbDraw gen_rtb_draw(const ImpressionRecord& imp, const RtbSpec& spec, Rng& rng);

}  // namespace banditiv
