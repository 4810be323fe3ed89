#include "obms/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "obms/linear_bic.hpp"

namespace obms {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// %.17g round-trips doubles exactly through text.
std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_or_na(double v) {
  return std::isnan(v) ? std::string("NA") : fmt_full(v);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t from = 0;
  while (true) {
    const std::size_t at = line.find(delim, from);
    if (at == std::string::npos) {
      out.push_back(line.substr(from));
      return out;
    }
    out.push_back(line.substr(from, at - from));
    from = at + 1;
  }
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b == e) return false;
  const auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

BatchData ingest_batch(const std::string& path, int batch_index,
                       IngestStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_batch: cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("ingest_batch: empty file " + path);
  header_line = strip_cr(header_line);
  const char delim = header_line.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> header = split(header_line, delim);
  if (header.empty() || header[0] != "y")
    throw std::runtime_error("ingest_batch: first column must be `y` in " + path);
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1)
    throw std::runtime_error("ingest_batch: no predictor columns in " + path);

  std::vector<double> ys;
  std::vector<double> xs;  // row-major, p per row
  int rejected = 0;
  std::string line;
  std::vector<double> row(static_cast<std::size_t>(p) + 1);
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, delim);
    bool ok = cells.size() == header.size();
    if (ok) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!parse_double(cells[c], row[c])) {
          ok = false;
          break;
        }
      }
    }
    if (ok && row[0] != 0.0 && row[0] != 1.0) ok = false;
    if (!ok) {
      ++rejected;
      continue;
    }
    ys.push_back(row[0]);
    xs.insert(xs.end(), row.begin() + 1, row.end());
  }

  if (stats) {
    stats->rows_kept = static_cast<int>(ys.size());
    stats->rows_rejected = rejected;
  }
  if (ys.empty())
    throw std::runtime_error("ingest_batch: no usable rows in " + path);

  const int n = static_cast<int>(ys.size());
  BatchData batch;
  batch.batch_index = batch_index;
  batch.X.resize(n, p + 1);
  batch.y.resize(n);
  for (int i = 0; i < n; ++i) {
    batch.X(i, 0) = 1.0;
    batch.y(i) = ys[static_cast<std::size_t>(i)];
    for (int j = 0; j < p; ++j)
      batch.X(i, j + 1) = xs[static_cast<std::size_t>(i) * p + j];
  }
  return batch;
}

DirectorySource::DirectorySource(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("DirectorySource: not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("batch_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      files_.push_back(entry.path().string());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty())
    throw std::runtime_error("DirectorySource: no batch_*.csv files in " + dir);
}

BatchData DirectorySource::at(int batch_index) {
  if (batch_index < 1 || batch_index > count())
    throw std::out_of_range("DirectorySource: batch index out of range");
  return ingest_batch(files_[static_cast<std::size_t>(batch_index - 1)],
                      batch_index, &last_ingest_);
}

void write_batch_csv(const std::string& path, const BatchData& batch) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_batch_csv: cannot open " + path);
  const int p = batch.predictors();
  out << "y";
  for (int j = 1; j <= p; ++j) out << ",x" << j;
  out << "\n";
  for (int i = 0; i < batch.rows(); ++i) {
    out << fmt_full(batch.y(i));
    for (int j = 1; j <= p; ++j) out << ',' << fmt_full(batch.X(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_batch_csv: write failed: " + path);
}

void write_truth_file(const std::string& path, const Eigen::VectorXd& beta_true) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_truth_file: cannot open " + path);
  out << "beta_true\n";
  for (Eigen::Index i = 0; i < beta_true.size(); ++i)
    out << fmt_full(beta_true(i)) << "\n";
  if (!out) throw std::runtime_error("write_truth_file: write failed: " + path);
}

Eigen::VectorXd read_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_truth_file: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "beta_true")
    throw std::runtime_error("read_truth_file: bad header in " + path);
  std::vector<double> values;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    double v;
    if (!parse_double(line, v))
      throw std::runtime_error("read_truth_file: bad value in " + path);
    values.push_back(v);
  }
  if (values.size() < 2)
    throw std::runtime_error("read_truth_file: too few coefficients in " + path);
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

// ---------------------------------------------------------------------------
// Online changing runner

OnlineChangingRunner::OnlineChangingRunner(int p, const ChangingConfig& config)
    : p_(p),
      config_(config),
      stats_(p),
      chain_start_(ModelIndicator::null_model(p)) {
  if (config.access_window < 1)
    throw std::invalid_argument("OnlineChangingRunner: access_window must be >= 1");
}

MethodOutput OnlineChangingRunner::step(const BatchData& batch) {
  const double t0 = now_seconds();
  batch.validate();
  if (batch.predictors() != p_)
    throw std::invalid_argument("OnlineChangingRunner: predictor count mismatch");
  if (batch.batch_index != batches_seen_ + 1)
    throw std::invalid_argument("OnlineChangingRunner: batches must arrive in order");
  ++batches_seen_;

  stats_.update(batch);

  Rng rng = Rng(config_.seed)
                .fork(streams::kSampler)
                .fork(static_cast<std::uint64_t>(batches_seen_));
  BicCache cache(stats_);
  const ModelPrior prior = config_.prior;
  LogPostFn log_post;
  if (config_.memoize_bic) {
    log_post = [&](const ModelIndicator& g) {
      const double bic = cache.bic(g);
      if (!std::isfinite(bic)) return -std::numeric_limits<double>::infinity();
      return -0.5 * bic + log_prior(g, prior);
    };
  } else {
    log_post = [&](const ModelIndicator& g) {
      const double bic = bic_of(stats_, g);
      if (!std::isfinite(bic)) return -std::numeric_limits<double>::infinity();
      return -0.5 * bic + log_prior(g, prior);
    };
  }
  const ChainResult chain = run_chain(log_post, chain_start_, config_.sampler, rng);
  chain_start_ = chain.final_model;

  // Full-model logistic estimate: offline on the retained window rows while
  // the window is open, renewed online afterwards.
  Eigen::VectorXd beta_full;
  std::string note;
  if (batches_seen_ <= config_.access_window) {
    window_.push_back(batch);
    Eigen::Index rows = 0;
    for (const BatchData& b : window_) rows += b.X.rows();
    Eigen::MatrixXd X(rows, p_ + 1);
    Eigen::VectorXd y(rows);
    Eigen::Index at = 0;
    for (const BatchData& b : window_) {
      X.middleRows(at, b.X.rows()) = b.X;
      y.segment(at, b.y.size()) = b.y;
      at += b.X.rows();
    }
    if (batches_seen_ == config_.access_window) {
      LogisticFit fit = irls_fit(X, y, config_.irls);
      double lambda = config_.irls.ridge_lambda;
      if (!fit.converged && lambda == 0.0) {
        // A divergent unpenalized fit (separated window) would seed every
        // later renewal; a unit ridge restores a proper optimum.
        IrlsOptions ridged = config_.irls;
        ridged.ridge_lambda = 1.0;
        fit = irls_fit(X, y, ridged);
        lambda = ridged.ridge_lambda;
        note = "ridge_fallback";
      }
      renew_ = RenewableState::from_parts(
          fit.beta, logistic_information(X, fit.beta), rows, lambda);
      beta_full = renew_->beta();
      window_.clear();
      window_.shrink_to_fit();
    } else {
      beta_full = irls_fit(X, y, config_.irls).beta;
    }
  } else {
    const RenewReport report = renew_->renew(batch);
    if (!report.converged) note = "renew_nonconverged";
    beta_full = renew_->beta();
  }

  MethodOutput out;
  out.batch_index = batches_seen_;
  out.n_seen = stats_.n();
  out.inclusion_probs = chain.inclusion_probs;
  out.selected = select_mpm(chain.inclusion_probs).gamma;
  out.beta = threshold_beta(beta_full, out.selected);
  out.acceptance_rate = chain.acceptance_rate;
  out.distinct_visited = chain.distinct_visited;
  out.note = std::move(note);
  const double kept =
      static_cast<double>(config_.sampler.iterations - config_.sampler.burn_in);
  for (const RankedModel& rm : chain.top_models)
    out.top_models.emplace_back(rm.model.to_string(),
                                static_cast<double>(rm.visits) / kept);
  out.seconds = now_seconds() - t0;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

constexpr char kMagic[4] = {'O', 'B', 'M', 'S'};
constexpr char kTrailer[4] = {'K', 'C', 'E', 'H'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kKindChanging = 1;
constexpr std::uint8_t kKindFixed = 2;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_vec(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Eigen::VectorXd get_vec(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_mat(std::ostream& os, const Eigen::MatrixXd& m) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd get_mat(std::istream& is) {
  const auto r = get<std::uint64_t>(is);
  const auto c = get<std::uint64_t>(is);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return m;
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  std::string s(static_cast<std::size_t>(n), '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void put_sampler(std::ostream& os, const SamplerConfig& c) {
  put<std::int32_t>(os, c.iterations);
  put<std::int32_t>(os, c.burn_in);
  put<std::int32_t>(os, c.top_k);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(c.max_distinct));
}

SamplerConfig get_sampler(std::istream& is) {
  SamplerConfig c;
  c.iterations = get<std::int32_t>(is);
  c.burn_in = get<std::int32_t>(is);
  c.top_k = get<std::int32_t>(is);
  c.max_distinct = static_cast<std::size_t>(get<std::uint64_t>(is));
  return c;
}

void put_prior(std::ostream& os, const ModelPrior& p) {
  put<std::uint8_t>(os, p.kind == PriorKind::kUniform ? 0 : 1);
  put<double>(os, p.a);
  put<double>(os, p.b);
}

ModelPrior get_prior(std::istream& is) {
  const auto kind = get<std::uint8_t>(is);
  const double a = get<double>(is);
  const double b = get<double>(is);
  if (kind == 0) return ModelPrior::uniform();
  return ModelPrior::beta_binomial(a, b);
}

void put_irls(std::ostream& os, const IrlsOptions& o) {
  put<double>(os, o.ridge_lambda);
  put<double>(os, o.tol);
  put<std::int32_t>(os, o.max_iter);
}

IrlsOptions get_irls(std::istream& is) {
  IrlsOptions o;
  o.ridge_lambda = get<double>(is);
  o.tol = get<double>(is);
  o.max_iter = get<std::int32_t>(is);
  return o;
}

void open_checkpoint(std::ifstream& in, const std::string& path,
                     std::uint8_t expected_kind) {
  in.open(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic))
    throw std::runtime_error("checkpoint: not a checkpoint file: " + path);
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  const auto kind = get<std::uint8_t>(in);
  if (kind != expected_kind)
    throw std::runtime_error("checkpoint: wrong method kind in " + path);
}

void check_trailer(std::istream& is, const std::string& path) {
  char trailer[4];
  is.read(trailer, 4);
  if (!is || !std::equal(trailer, trailer + 4, kTrailer))
    throw std::runtime_error("checkpoint: truncated or corrupt file: " + path);
}

}  // namespace

void OnlineChangingRunner::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, kKindChanging);

  put<std::int32_t>(out, p_);
  put<std::uint64_t>(out, config_.seed);
  put<std::int32_t>(out, batches_seen_);
  put<std::int32_t>(out, config_.access_window);
  put<std::uint8_t>(out, config_.memoize_bic ? 1 : 0);
  put_sampler(out, config_.sampler);
  put_prior(out, config_.prior);
  put_irls(out, config_.irls);

  put<std::int64_t>(out, stats_.n());
  put<double>(out, stats_.yty());
  put_vec(out, stats_.xty());
  put_mat(out, stats_.xtx());
  put_str(out, chain_start_.to_string());

  put<std::uint8_t>(out, renew_.has_value() ? 1 : 0);
  if (renew_) {
    put_vec(out, renew_->beta());
    put_mat(out, renew_->info());
    put<std::int64_t>(out, renew_->n_seen());
    put<double>(out, renew_->ridge_lambda());
  }

  put<std::uint64_t>(out, static_cast<std::uint64_t>(window_.size()));
  for (const BatchData& b : window_) {
    put<std::int32_t>(out, b.batch_index);
    put_mat(out, b.X);
    put_vec(out, b.y);
  }

  out.write(kTrailer, 4);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

OnlineChangingRunner OnlineChangingRunner::restore_checkpoint(
    const std::string& path) {
  std::ifstream in;
  open_checkpoint(in, path, kKindChanging);

  const int p = get<std::int32_t>(in);
  ChangingConfig config;
  config.seed = get<std::uint64_t>(in);
  const int batches_seen = get<std::int32_t>(in);
  config.access_window = get<std::int32_t>(in);
  config.memoize_bic = get<std::uint8_t>(in) != 0;
  config.sampler = get_sampler(in);
  config.prior = get_prior(in);
  config.irls = get_irls(in);

  const auto n = get<std::int64_t>(in);
  const double yty = get<double>(in);
  const Eigen::VectorXd xty = get_vec(in);
  const Eigen::MatrixXd xtx = get_mat(in);
  const std::string start = get_str(in);

  OnlineChangingRunner runner(p, config);
  runner.batches_seen_ = batches_seen;
  runner.stats_ = SuffStats::from_moments(n, yty, xty, xtx);
  runner.chain_start_ = ModelIndicator::from_string(start);

  if (get<std::uint8_t>(in) != 0) {
    const Eigen::VectorXd beta = get_vec(in);
    const Eigen::MatrixXd info = get_mat(in);
    const auto n_seen = get<std::int64_t>(in);
    const double ridge = get<double>(in);
    runner.renew_ = RenewableState::from_parts(beta, info, n_seen, ridge);
  }

  const auto n_window = get<std::uint64_t>(in);
  runner.window_.reserve(static_cast<std::size_t>(n_window));
  for (std::uint64_t i = 0; i < n_window; ++i) {
    BatchData b;
    b.batch_index = get<std::int32_t>(in);
    b.X = get_mat(in);
    b.y = get_vec(in);
    runner.window_.push_back(std::move(b));
  }
  check_trailer(in, path);
  return runner;
}

// ---------------------------------------------------------------------------
// Online fixed runner

OnlineFixedRunner::OnlineFixedRunner(int p, const FixedConfig& config)
    : p_(p), config_(config), method_(p, config.options) {}

MethodOutput OnlineFixedRunner::step(const BatchData& batch) {
  const double t0 = now_seconds();
  if (batch.batch_index != batches_seen_ + 1)
    throw std::invalid_argument("OnlineFixedRunner: batches must arrive in order");
  ++batches_seen_;
  const bool was_screening = method_.screening_active();

  Rng rng = Rng(config_.seed)
                .fork(streams::kSampler)
                .fork(static_cast<std::uint64_t>(batches_seen_));
  method_.step(batch, rng);

  MethodOutput out;
  out.batch_index = batches_seen_;
  out.n_seen = method_.n_seen();
  out.inclusion_probs = method_.inclusion_probs();
  out.selected = select_mpm(method_.inclusion_probs()).gamma;
  out.beta = method_.beta_bma();
  out.acceptance_rate = method_.last_acceptance();
  out.distinct_visited = method_.last_distinct();
  out.screening = was_screening;
  out.stability = method_.last_stability();
  if (was_screening && !method_.screening_active())
    out.note = "frozen";
  else if (method_.last_renew_failures() > 0)
    out.note = "renew_nonconverged";
  for (const auto& [model, weight] : method_.last_top())
    out.top_models.emplace_back(model.to_string(), weight);
  out.seconds = now_seconds() - t0;
  return out;
}

void OnlineFixedRunner::save_checkpoint(const std::string& path) const {
  if (method_.screening_active())
    throw std::runtime_error(
        "checkpoint: the fixed baseline cannot be saved during screening; "
        "screening holds raw records and refit caches");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, kKindFixed);

  put<std::int32_t>(out, p_);
  put<std::uint64_t>(out, config_.seed);
  put<std::int32_t>(out, batches_seen_);
  put<double>(out, config_.options.stability_threshold);
  put<std::int32_t>(out, config_.options.max_screening_batches);
  put_sampler(out, config_.options.sampler);
  put_prior(out, config_.options.prior);
  put_irls(out, config_.options.irls);

  put<std::int32_t>(out, method_.screening_batches_used());
  put<double>(out, method_.last_stability());
  put<std::int64_t>(out, method_.n_seen());
  put_vec(out, method_.inclusion_probs());
  put_vec(out, method_.beta_bma());

  const auto& frozen = method_.frozen_models();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(frozen.size()));
  for (const FixedModelEntry& e : frozen) {
    put_str(out, e.gamma.to_string());
    put_vec(out, e.renew.beta());
    put_mat(out, e.renew.info());
    put<std::int64_t>(out, e.renew.n_seen());
    put<double>(out, e.renew.ridge_lambda());
    put<double>(out, e.loglik);
  }

  out.write(kTrailer, 4);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

OnlineFixedRunner OnlineFixedRunner::restore_checkpoint(const std::string& path) {
  std::ifstream in;
  open_checkpoint(in, path, kKindFixed);

  const int p = get<std::int32_t>(in);
  FixedConfig config;
  config.seed = get<std::uint64_t>(in);
  const int batches_seen = get<std::int32_t>(in);
  config.options.stability_threshold = get<double>(in);
  config.options.max_screening_batches = get<std::int32_t>(in);
  config.options.sampler = get_sampler(in);
  config.options.prior = get_prior(in);
  config.options.irls = get_irls(in);

  const int batches_used = get<std::int32_t>(in);
  const double stability = get<double>(in);
  const auto n_seen = get<std::int64_t>(in);
  const Eigen::VectorXd probs = get_vec(in);
  const Eigen::VectorXd beta_bma = get_vec(in);

  const auto n_frozen = get<std::uint64_t>(in);
  std::vector<FixedModelEntry> frozen;
  frozen.reserve(static_cast<std::size_t>(n_frozen));
  for (std::uint64_t i = 0; i < n_frozen; ++i) {
    FixedModelEntry e;
    e.gamma = ModelIndicator::from_string(get_str(in));
    const Eigen::VectorXd beta = get_vec(in);
    const Eigen::MatrixXd info = get_mat(in);
    const auto rn = get<std::int64_t>(in);
    const double ridge = get<double>(in);
    e.renew = RenewableState::from_parts(beta, info, rn, ridge);
    e.loglik = get<double>(in);
    frozen.push_back(std::move(e));
  }
  check_trailer(in, path);

  OnlineFixedRunner runner(p, config, /*restored=*/true);
  runner.batches_seen_ = batches_seen;
  runner.method_ = OnlineFixedModelSel::from_frozen(
      p, config.options, std::move(frozen), batches_used, n_seen, probs,
      beta_bma, stability);
  return runner;
}

OnlineFixedRunner::OnlineFixedRunner(int p, const FixedConfig& config, bool)
    : p_(p), config_(config), method_(p, config.options) {}

// ---------------------------------------------------------------------------
// Offline runner

OfflineRunner::OfflineRunner(int p, const OfflineConfig& config)
    : p_(p),
      config_(config),
      X_(0, p + 1),
      y_(0),
      chain_start_(ModelIndicator::null_model(p)) {}

MethodOutput OfflineRunner::step(const BatchData& batch) {
  const double t0 = now_seconds();
  batch.validate();
  if (batch.predictors() != p_)
    throw std::invalid_argument("OfflineRunner: predictor count mismatch");
  if (batch.batch_index != batches_seen_ + 1)
    throw std::invalid_argument("OfflineRunner: batches must arrive in order");
  ++batches_seen_;

  const Eigen::Index old_rows = X_.rows();
  X_.conservativeResize(old_rows + batch.X.rows(), Eigen::NoChange);
  X_.bottomRows(batch.X.rows()) = batch.X;
  y_.conservativeResize(old_rows + batch.y.size());
  y_.tail(batch.y.size()) = batch.y;

  Rng rng = Rng(config_.seed)
                .fork(streams::kSampler)
                .fork(static_cast<std::uint64_t>(batches_seen_));
  const OfflineMc3Result result =
      offline_logistic_mc3(X_, y_, config_.prior, config_.sampler, config_.irls,
                           rng, chain_start_, &warm_);
  chain_start_ = result.final_model;

  MethodOutput out;
  out.batch_index = batches_seen_;
  out.n_seen = X_.rows();
  out.inclusion_probs = result.inclusion_probs;
  out.selected = select_mpm(result.inclusion_probs).gamma;
  out.beta = result.beta_bma;
  out.acceptance_rate = result.acceptance_rate;
  out.distinct_visited = result.distinct_visited;
  const double kept =
      static_cast<double>(config_.sampler.iterations - config_.sampler.burn_in);
  for (const RankedModel& rm : result.distinct_models) {
    if (static_cast<int>(out.top_models.size()) >= config_.sampler.top_k) break;
    out.top_models.emplace_back(rm.model.to_string(),
                                static_cast<double>(rm.visits) / kept);
  }
  out.seconds = now_seconds() - t0;
  return out;
}

// ---------------------------------------------------------------------------
// Report files

struct RunWriter::Impl {
  std::ofstream report;
  std::ofstream probs;
  std::ofstream beta;
  std::ofstream sampler;
  std::ofstream timing;
  std::string method;
  int p;
};

RunWriter::RunWriter(const std::string& out_dir, const std::string& method,
                     int p, bool append)
    : impl_(new Impl) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  impl_->method = method;
  impl_->p = p;

  const auto open_one = [&](std::ofstream& os, const char* name) {
    const fs::path path = base / name;
    const bool fresh =
        !append || !fs::exists(path) || fs::file_size(path) == 0;
    os.open(path, fresh ? std::ios::out : std::ios::app);
    if (!os)
      throw std::runtime_error("RunWriter: cannot open report files in " +
                               out_dir);
    return fresh;
  };

  if (open_one(impl_->report, "report.tsv"))
    impl_->report << "batch\tmethod\tn_seen\tselected\taccept_rate\tdistinct\t"
                     "screening\tstability\tnote\n";
  if (open_one(impl_->probs, "probs.tsv")) {
    impl_->probs << "batch";
    for (int j = 1; j <= p; ++j) impl_->probs << "\tprob_" << j;
    impl_->probs << "\n";
  }
  if (open_one(impl_->beta, "beta.tsv")) {
    impl_->beta << "batch";
    for (int j = 0; j <= p; ++j) impl_->beta << "\tbeta_" << j;
    impl_->beta << "\n";
  }
  if (open_one(impl_->sampler, "sampler.tsv"))
    impl_->sampler << "batch\trank\tmodel\tpost_prob\n";
  if (open_one(impl_->timing, "timing.tsv")) impl_->timing << "batch\tseconds\n";
}

RunWriter::~RunWriter() = default;

void RunWriter::add(const MethodOutput& m) {
  impl_->report << m.batch_index << '\t' << impl_->method << '\t' << m.n_seen
                << '\t' << m.selected.to_string() << '\t'
                << fmt_or_na(m.acceptance_rate) << '\t' << m.distinct_visited
                << '\t' << (m.screening ? 1 : 0) << '\t'
                << fmt_or_na(m.stability) << '\t'
                << (m.note.empty() ? "-" : m.note) << "\n";
  impl_->probs << m.batch_index;
  for (Eigen::Index j = 0; j < m.inclusion_probs.size(); ++j)
    impl_->probs << '\t' << fmt_full(m.inclusion_probs(j));
  impl_->probs << "\n";
  impl_->beta << m.batch_index;
  for (Eigen::Index j = 0; j < m.beta.size(); ++j)
    impl_->beta << '\t' << fmt_full(m.beta(j));
  impl_->beta << "\n";
  int rank = 1;
  for (const auto& [model, prob] : m.top_models)
    impl_->sampler << m.batch_index << '\t' << rank++ << '\t' << model << '\t'
                   << fmt_full(prob) << "\n";
  impl_->timing << m.batch_index << '\t' << fmt_full(m.seconds) << "\n";
}

void RunWriter::flush() {
  impl_->report.flush();
  impl_->probs.flush();
  impl_->beta.flush();
  impl_->sampler.flush();
  impl_->timing.flush();
}

// ---------------------------------------------------------------------------
// Evaluation

void evaluate_run(const std::string& run_dir, const std::string& truth_path,
                  const std::string& test_path, const std::string& out_path,
                  int replicate) {
  const Eigen::VectorXd beta_true = read_truth_file(truth_path);
  const int p = static_cast<int>(beta_true.size()) - 1;
  ModelIndicator gamma_true(p);
  for (int j = 0; j < p; ++j)
    if (beta_true(j + 1) != 0.0) gamma_true.set(j, true);

  const BatchData test = ingest_batch(test_path, 1);
  if (test.predictors() != p)
    throw std::runtime_error("evaluate_run: test set predictor count mismatch");

  const fs::path base(run_dir);

  // report.tsv: batch, method, selected.
  std::ifstream report(base / "report.tsv");
  if (!report) throw std::runtime_error("evaluate_run: missing report.tsv");
  std::string line;
  std::getline(report, line);
  struct Row {
    std::string method;
    std::string selected;
  };
  std::map<int, Row> rows;
  while (std::getline(report, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, '\t');
    if (cells.size() < 4)
      throw std::runtime_error("evaluate_run: malformed report.tsv row");
    rows[std::stoi(cells[0])] = Row{cells[1], cells[3]};
  }

  // beta.tsv: batch, beta_0..beta_p.
  std::ifstream beta_file(base / "beta.tsv");
  if (!beta_file) throw std::runtime_error("evaluate_run: missing beta.tsv");
  std::getline(beta_file, line);
  std::map<int, Eigen::VectorXd> betas;
  while (std::getline(beta_file, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, '\t');
    if (static_cast<int>(cells.size()) != p + 2)
      throw std::runtime_error("evaluate_run: malformed beta.tsv row");
    Eigen::VectorXd b(p + 1);
    for (int j = 0; j <= p; ++j) {
      if (!parse_double(cells[static_cast<std::size_t>(j) + 1], b(j)))
        throw std::runtime_error("evaluate_run: bad beta value");
    }
    betas[std::stoi(cells[0])] = std::move(b);
  }

  // timing.tsv is optional; wall time joins as NA when absent.
  std::map<int, double> seconds;
  {
    std::ifstream timing(base / "timing.tsv");
    if (timing) {
      std::getline(timing, line);
      while (std::getline(timing, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line, '\t');
        double s;
        if (cells.size() == 2 && parse_double(cells[1], s))
          seconds[std::stoi(cells[0])] = s;
      }
    }
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("evaluate_run: cannot open " + out_path);
  out << "replicate\tbatch\tmethod\trmse_beta\ttpr\tfpr\tauc\twall_time\n";
  for (const auto& [batch, row] : rows) {
    const auto bit = betas.find(batch);
    if (bit == betas.end())
      throw std::runtime_error("evaluate_run: beta.tsv missing batch " +
                               std::to_string(batch));
    const Eigen::VectorXd& b = bit->second;

    const ModelIndicator selected = ModelIndicator::from_string(row.selected);
    const Confusion c = tpr_fpr(selected, gamma_true);
    const double rmse = rmse_beta(b, beta_true);
    const double a = auc(test.X * b, test.y);
    const auto sit = seconds.find(batch);
    const double wall =
        sit == seconds.end() ? std::numeric_limits<double>::quiet_NaN()
                             : sit->second;

    out << replicate << '\t' << batch << '\t' << row.method << '\t'
        << fmt_full(rmse) << '\t' << fmt_or_na(c.tpr) << '\t'
        << fmt_or_na(c.fpr) << '\t' << fmt_or_na(a) << '\t' << fmt_or_na(wall)
        << "\n";
  }
  if (!out) throw std::runtime_error("evaluate_run: write failed: " + out_path);
}

}  // namespace obms
