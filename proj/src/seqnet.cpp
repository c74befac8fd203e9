#include "fairgrade/seqnet.hpp"

#include <cmath>

#include "fairgrade/errors.hpp"
#include "fairgrade/rng.hpp"

namespace fairgrade {

RunMode run_mode_from_string(const std::string& s) {
  if (s == "train") return RunMode::Train;
  if (s == "infer_full") return RunMode::InferFull;
  if (s == "infer_rmv") return RunMode::InferRmv;
  throw ValidationError("unknown run mode '" + s + "'");
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Train: return "train";
    case RunMode::InferFull: return "infer_full";
    case RunMode::InferRmv: return "infer_rmv";
  }
  return "?";
}

void ModelDims::validate() const {
  if (course_count <= 0 || letter_count <= 0 || hidden <= 0 || race_classes <= 0 ||
      feature_dim < 0)
    throw ValidationError("model dimensions must be positive");
}

std::vector<std::pair<std::string, std::pair<int, int>>> ModelParams::tensor_order(
    const ModelDims& dims) {
  const int in = dims.input_size();
  const int h = dims.hidden;
  return {
      {"w_gates", {4 * h, in + h}},
      {"b_gates", {4 * h, 1}},
      {"w_grade", {dims.grade_output_size(), h}},
      {"b_grade", {dims.grade_output_size(), 1}},
      {"w_race", {dims.race_classes, h}},
      {"b_race", {dims.race_classes, 1}},
  };
}

static Eigen::VectorXd concat_params(const Eigen::MatrixXd& wg, const Eigen::VectorXd& bg,
                                     const Eigen::MatrixXd& wgr, const Eigen::VectorXd& bgr,
                                     const Eigen::MatrixXd& wr, const Eigen::VectorXd& br) {
  Eigen::VectorXd out(wg.size() + bg.size() + wgr.size() + bgr.size() + wr.size() +
                      br.size());
  Eigen::Index off = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    out.segment(off, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    off += n;
  };
  put(wg.data(), wg.size());
  put(bg.data(), bg.size());
  put(wgr.data(), wgr.size());
  put(bgr.data(), bgr.size());
  put(wr.data(), wr.size());
  put(br.data(), br.size());
  return out;
}

Eigen::VectorXd ModelParams::flatten() const {
  return concat_params(w_gates, b_gates, w_grade, b_grade, w_race, b_race);
}

std::int64_t ModelParams::parameter_count() const {
  return w_gates.size() + b_gates.size() + w_grade.size() + b_grade.size() +
         w_race.size() + b_race.size();
}

void ModelParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw InternalError("unflatten: parameter count mismatch");
  Eigen::Index off = 0;
  auto take = [&](double* data, Eigen::Index n) {
    Eigen::Map<Eigen::VectorXd>(data, n) = flat.segment(off, n);
    off += n;
  };
  take(w_gates.data(), w_gates.size());
  take(b_gates.data(), b_gates.size());
  take(w_grade.data(), w_grade.size());
  take(b_grade.data(), b_grade.size());
  take(w_race.data(), w_race.size());
  take(b_race.data(), b_race.size());
}

ParamGrads ParamGrads::zeros(const ModelDims& dims) {
  ParamGrads g;
  const int in = dims.input_size();
  const int h = dims.hidden;
  g.w_gates = Eigen::MatrixXd::Zero(4 * h, in + h);
  g.b_gates = Eigen::VectorXd::Zero(4 * h);
  g.w_grade = Eigen::MatrixXd::Zero(dims.grade_output_size(), h);
  g.b_grade = Eigen::VectorXd::Zero(dims.grade_output_size());
  g.w_race = Eigen::MatrixXd::Zero(dims.race_classes, h);
  g.b_race = Eigen::VectorXd::Zero(dims.race_classes);
  return g;
}

Eigen::VectorXd ParamGrads::flatten() const {
  return concat_params(w_gates, b_gates, w_grade, b_grade, w_race, b_race);
}

void ParamGrads::check_finite() const {
  auto check = [](const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite())
      throw InternalError(std::string("non-finite gradient in parameter block ") + name);
  };
  check(w_gates, "w_gates");
  check(b_gates, "b_gates");
  check(w_grade, "w_grade");
  check(b_grade, "b_grade");
  check(w_race, "w_race");
  check(b_race, "b_race");
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(seed);
  auto glorot = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
    return m;
  };

  const int in = dims.input_size();
  const int h = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.w_gates = glorot(4 * h, in + h);
  p.b_gates = Eigen::VectorXd::Zero(4 * h);
  p.b_gates.segment(h, h).setOnes();  // forget gate
  p.w_grade = glorot(dims.grade_output_size(), h);
  p.b_grade = Eigen::VectorXd::Zero(dims.grade_output_size());
  p.w_race = glorot(dims.race_classes, h);
  p.b_race = Eigen::VectorXd::Zero(dims.race_classes);
  return p;
}

void column_softmax(Eigen::MatrixXd& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    col /= col.sum();
  }
}

void blockwise_grade_softmax(const ModelDims& dims, Eigen::MatrixXd& logits) {
  const int m = dims.letter_count;
  const int lw = dims.label_width();
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    for (int course = 0; course < dims.course_count; ++course) {
      auto letters = logits.col(c).segment(course * lw, m);
      double mx = letters.maxCoeff();
      letters = (letters.array() - mx).exp();
      letters /= letters.sum();
      auto pnp = logits.col(c).segment(course * lw + m, 2);
      mx = pnp.maxCoeff();
      pnp = (pnp.array() - mx).exp();
      pnp /= pnp.sum();
    }
  }
}

namespace {

// Indices of the 1-entries of x_t for one sequence column.
void input_indices(const EncodedStep& step, const EncodedSequence& seq,
                   const ModelDims& dims, RunMode mode, std::vector<int>& out) {
  out.clear();
  const int lw = dims.label_width();
  for (const auto& g : step.grades_in) out.push_back(g.course * lw + g.slot);
  const int course_off = dims.grade_width();
  for (int c : step.next_courses) out.push_back(course_off + c);
  if (mode != RunMode::InferRmv && dims.feature_dim > 0) {
    const int feat_off = course_off + dims.course_count;
    for (int j = 0; j < dims.feature_dim; ++j)
      if (seq.attributes[j] != 0.0) out.push_back(feat_off + j);
  }
}

}  // namespace

ForwardTrace forward(const ModelParams& params, const Batch& batch, RunMode mode) {
  const ModelDims& dims = params.dims;
  const int h = dims.hidden;
  const int in = dims.input_size();
  const int B = batch.size();
  if (params.w_gates.rows() != 4 * h || params.w_gates.cols() != in + h)
    throw InternalError("forward: gate weight shape does not match dims");

  ForwardTrace trace;
  trace.batch = &batch;
  trace.dims = dims;
  if (B == 0 || batch.max_steps == 0) return trace;

  const auto wx = params.w_gates.leftCols(in);
  const auto wh = params.w_gates.rightCols(h);

  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, B);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, B);
  std::vector<int> idx;

  for (int t = 0; t < batch.max_steps; ++t) {
    StepTrace st;
    Eigen::MatrixXd z = params.b_gates.replicate(1, B);
    z.noalias() += wh * h_prev;
    for (int b = 0; b < B; ++b) {
      const EncodedStep* step = batch.step(t, b);
      if (step == nullptr) continue;  // zero padding step
      input_indices(*step, *batch.sequences[b], dims, mode, idx);
      for (int k : idx) z.col(b) += wx.col(k);
    }

    auto sigmoid = [](Eigen::MatrixXd m) {
      return ((-m.array()).exp() + 1.0).inverse().matrix().eval();
    };
    st.gate_i = sigmoid(z.topRows(h));
    st.gate_f = sigmoid(z.middleRows(h, h));
    st.gate_g = z.middleRows(2 * h, h).array().tanh();
    st.gate_o = sigmoid(z.bottomRows(h));

    st.cell = st.gate_f.cwiseProduct(c_prev) + st.gate_i.cwiseProduct(st.gate_g);
    st.cell_tanh = st.cell.array().tanh();
    st.hidden = st.gate_o.cwiseProduct(st.cell_tanh);

    st.grade_probs = params.w_grade * st.hidden;
    st.grade_probs.colwise() += params.b_grade;
    blockwise_grade_softmax(dims, st.grade_probs);

    st.race_probs = params.w_race * st.hidden;
    st.race_probs.colwise() += params.b_race;
    column_softmax(st.race_probs);

    h_prev = st.hidden;
    c_prev = st.cell;
    trace.steps.push_back(std::move(st));
  }
  return trace;
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace,
                    const std::vector<Eigen::MatrixXd>& d_grade_logits,
                    const std::vector<Eigen::MatrixXd>& d_race_logits,
                    double alpha) {
  if (alpha < 0.0) throw ValidationError("alpha must be non-negative");
  const ModelDims& dims = params.dims;
  const int h = dims.hidden;
  const int in = dims.input_size();
  ParamGrads grads = ParamGrads::zeros(dims);
  if (trace.step_count() == 0) return grads;

  const Batch& batch = *trace.batch;
  const int B = batch.size();
  const auto wh = params.w_gates.rightCols(h);
  auto gwx = grads.w_gates.leftCols(in);
  auto gwh = grads.w_gates.rightCols(h);

  Eigen::MatrixXd dh_acc = Eigen::MatrixXd::Zero(h, B);
  Eigen::MatrixXd dc_acc = Eigen::MatrixXd::Zero(h, B);
  std::vector<int> idx;

  const bool use_race = !d_race_logits.empty();
  for (int t = trace.step_count() - 1; t >= 0; --t) {
    const StepTrace& st = trace.steps[t];
    Eigen::MatrixXd dh = dh_acc;

    if (t < static_cast<int>(d_grade_logits.size()) && d_grade_logits[t].size() > 0) {
      const Eigen::MatrixXd& dgl = d_grade_logits[t];
      grads.w_grade.noalias() += dgl * st.hidden.transpose();
      grads.b_grade += dgl.rowwise().sum();
      dh.noalias() += params.w_grade.transpose() * dgl;
    }
    if (use_race && t < static_cast<int>(d_race_logits.size()) &&
        d_race_logits[t].size() > 0) {
      const Eigen::MatrixXd& drl = d_race_logits[t];
      grads.w_race.noalias() += drl * st.hidden.transpose();
      grads.b_race += drl.rowwise().sum();
      if (alpha != 0.0) dh.noalias() -= alpha * (params.w_race.transpose() * drl);
    }

    const Eigen::MatrixXd dc =
        dc_acc +
        dh.cwiseProduct(st.gate_o)
            .cwiseProduct((1.0 - st.cell_tanh.array().square()).matrix());
    const Eigen::MatrixXd c_prev =
        t > 0 ? trace.steps[t - 1].cell : Eigen::MatrixXd::Zero(h, B);

    Eigen::MatrixXd dz(4 * h, B);
    dz.topRows(h) = dc.cwiseProduct(st.gate_g)
                        .cwiseProduct(st.gate_i)
                        .cwiseProduct((1.0 - st.gate_i.array()).matrix());
    dz.middleRows(h, h) = dc.cwiseProduct(c_prev)
                              .cwiseProduct(st.gate_f)
                              .cwiseProduct((1.0 - st.gate_f.array()).matrix());
    dz.middleRows(2 * h, h) =
        dc.cwiseProduct(st.gate_i)
            .cwiseProduct((1.0 - st.gate_g.array().square()).matrix());
    dz.bottomRows(h) = dh.cwiseProduct(st.cell_tanh)
                           .cwiseProduct(st.gate_o)
                           .cwiseProduct((1.0 - st.gate_o.array()).matrix());

    grads.b_gates += dz.rowwise().sum();
    const Eigen::MatrixXd& h_prev_m =
        t > 0 ? trace.steps[t - 1].hidden : Eigen::MatrixXd::Zero(h, B);
    gwh.noalias() += dz * h_prev_m.transpose();
    for (int b = 0; b < B; ++b) {
      const EncodedStep* step = batch.step(t, b);
      if (step == nullptr) continue;
      input_indices(*step, *batch.sequences[b], dims,
                    RunMode::Train, idx);
      for (int k : idx) gwx.col(k) += dz.col(b);
    }

    dh_acc.noalias() = wh.transpose() * dz;
    dc_acc = dc.cwiseProduct(st.gate_f);
  }

  grads.check_finite();
  return grads;
}

std::map<int, GradeDistribution> predict_term(const ModelParams& params,
                                              const EncodedSequence& history,
                                              const std::vector<int>& enrollments,
                                              RunMode mode) {
  std::map<int, GradeDistribution> out;
  if (enrollments.empty()) return out;
  const ModelDims& dims = params.dims;
  for (int c : enrollments)
    if (c < 0 || c >= dims.course_count)
      throw ValidationError("predict_term: course index " + std::to_string(c) +
                            " outside the catalog");

  EncodedSequence extended = history;
  EncodedStep next;
  if (!history.steps.empty()) {
    const EncodedStep& last = history.steps.back();
    next.input_term = last.target_term;
    next.target_term = last.target_term + 1;
    // Grades fed in are the ones just predicted, i.e. the targets of the
    // last real step.
    next.grades_in = last.targets;
  }
  next.next_courses = enrollments;
  next.has_target_term = false;
  extended.steps.push_back(std::move(next));

  Batch batch;
  batch.sequences = {&extended};
  batch.max_steps = static_cast<int>(extended.steps.size());
  ForwardTrace trace = forward(params, batch, mode);

  const Eigen::MatrixXd& probs = trace.steps.back().grade_probs;
  const int lw = dims.label_width();
  for (int c : enrollments) {
    GradeDistribution d;
    d.letter = probs.col(0).segment(c * lw, dims.letter_count);
    d.pass_np = probs.col(0).segment(c * lw + dims.letter_count, 2);
    out[c] = std::move(d);
  }
  return out;
}

}  // namespace fairgrade
