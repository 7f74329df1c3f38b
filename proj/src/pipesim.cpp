#include "df2/pipesim.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

namespace df2 {

int core_beat(std::uint8_t spike_byte, const std::int8_t* weights8) {
    int acc = 0;
    for (int l = 0; l < 8; ++l) {
        if (spike_byte & (1u << l)) acc += weights8[l];
    }
    return acc;
}

bool fire(std::int64_t acc, std::int32_t threshold) { return acc > threshold; }

int transduce_mac(const std::uint8_t* pixels, const std::int8_t* weights, int n) {
    int acc = 0;
    for (int i = 0; i < n; ++i) {
        acc += static_cast<int>(pixels[i]) * static_cast<int>(weights[i]);
    }
    return acc;
}

int classify(const std::vector<std::int32_t>& potentials) {
    int best = 0;
    for (std::size_t i = 1; i < potentials.size(); ++i) {
        if (potentials[i] > potentials[best]) best = static_cast<int>(i);
    }
    return best;
}

MergedColumn merge_round_robin(const std::vector<MergeSource>& sources, int rows,
                               int channels) {
    if (sources.empty()) throw SimError("merge needs at least one source");
    if (rows < 1 || channels < 1) throw SimError("merge shape must be positive");
    int expect = 0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const MergeSource& s = sources[i];
        if (s.ch_lo < expect) {
            throw SimError("merge source " + std::to_string(i) +
                           " overlaps the previous source's channel range");
        }
        if (s.ch_lo > expect) {
            throw SimError("merge sources leave a gap before channel " +
                           std::to_string(s.ch_lo));
        }
        if (s.ch_hi <= s.ch_lo) {
            throw SimError("merge source " + std::to_string(i) +
                           " has an empty channel range");
        }
        if (s.values.size() !=
            static_cast<std::size_t>(s.ch_hi - s.ch_lo) * rows) {
            throw SimError("merge source " + std::to_string(i) +
                           " payload does not match its channel range");
        }
        expect = s.ch_hi;
    }
    if (expect != channels) {
        throw SimError("merge sources cover " + std::to_string(expect) +
                       " channels, column has " + std::to_string(channels));
    }

    MergedColumn out;
    out.values.assign(static_cast<std::size_t>(channels) * rows, 0);
    std::vector<int> next(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) next[i] = sources[i].ch_lo;
    int remaining = channels;
    while (remaining > 0) {
        for (std::size_t s = 0; s < sources.size(); ++s) {
            if (next[s] >= sources[s].ch_hi) continue;
            int ch = next[s]++;
            const MergeSource& src = sources[s];
            std::copy_n(src.values.begin() +
                            static_cast<std::size_t>(ch - src.ch_lo) * rows,
                        rows, out.values.begin() + static_cast<std::size_t>(ch) * rows);
            out.schedule.push_back(static_cast<int>(s));
            --remaining;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BufCol {
    int img = 0;
    int col = 0;
};

enum State : int { kBusy = 0, kStalled = 1, kIdle = 2 };

struct LayerRt {
    const LayerSpec* spec = nullptr;
    const LayerGeometry* geom = nullptr;
    const LayerMapping* map = nullptr;
    const QuantLayer* params = nullptr;
    bool is_fc = false;
    bool is_transduction = false;
    int out_cols = 0;
    long long op_cycles = 0;

    // conv input buffers
    bool s1_full = false, s1_reserved = false;
    BufCol s1_col;
    std::deque<BufCol> s2;

    // fc input buffers
    int fc_collect_img = 0;
    int fc_collect_cols = 0;
    bool fc_s2_full = false;
    int fc_s2_img = 0;

    // compute state
    bool running = false;
    long long op_end = 0;
    int img = 0;
    int col = 0;
    bool done = false;

    long long delivery_offset = 0;
    std::vector<std::array<long long, 3>> intervals;  // t0, t1, state
};

struct Tracer {
    std::ofstream out;
    bool on = false;

    void open(const std::string& path) {
        if (path.empty()) return;
        out.open(path, std::ios::trunc);
        if (!out) throw SimError("cannot open trace file '" + path + "'");
        out << "cycle,layer,image,col,event\n";
        on = true;
    }
    void row(long long cycle, int layer, int img, int col, const char* event) {
        if (on) out << cycle << ',' << layer << ',' << img << ',' << col << ','
                    << event << '\n';
    }
};

class PipeEngine {
  public:
    PipeEngine(const NetworkSpec& net, const std::vector<LayerGeometry>& geoms,
               const MappingPlan& plan, const QuantModel& model,
               std::vector<ImageU8> images, const SimOptions& opts, int reported)
        : net_(net), geoms_(geoms), plan_(plan), model_(model),
          images_(std::move(images)), opts_(opts), reported_(reported) {
        const std::size_t n = net.layers.size();
        layers_.resize(n);
        acts_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            LayerRt& L = layers_[i];
            L.spec = &net.layers[i];
            L.geom = &geoms[i];
            L.map = &plan.layers[i];
            L.params = &model.layers[i];
            L.is_fc = L.spec->kind == LayerKind::FullyConnected;
            L.is_transduction = L.spec->kind == LayerKind::TransductionConv;
            L.out_cols = L.is_fc ? 1 : L.geom->out_cols;
            L.op_cycles = static_cast<long long>(L.map->npu) * L.geom->beats_per_neuron +
                          opts.handshake_cycles;
            int max_share = 0;
            for (const SlrShare& s : L.map->splits) {
                max_share = std::max(max_share, s.omega_share);
            }
            long long chain_cores =
                static_cast<long long>(L.geom->kappa) * std::max(max_share, 1);
            long long hops = (chain_cores + opts.group_size - 1) / opts.group_size - 1;
            L.delivery_offset = 5 + hops;
            if (L.map->splits.size() > 1) {
                L.delivery_offset +=
                    opts.bridge_cycles + static_cast<long long>(L.map->splits.size()) *
                                             opts.merge_cycles_per_source;
            }
        }
        tracer_.open(opts.trace_path);
    }

    SimReport run() {
        while (!all_done()) {
            settle();
            long long next = -1;
            for (LayerRt& L : layers_) {
                if (L.running) next = next < 0 ? L.op_end : std::min(next, L.op_end);
            }
            if (next < 0) dump_deadlock();
            account(now_, next);
            now_ = next;
            for (std::size_t i = 0; i < layers_.size(); ++i) {
                if (layers_[i].running && layers_[i].op_end == now_) {
                    finish(static_cast<int>(i));
                }
            }
        }
        return report();
    }

  private:
    bool all_done() const {
        for (const LayerRt& L : layers_) {
            if (!L.done) return false;
        }
        return true;
    }

    // Input columns needed in stage 2 before output column j can start.
    void window(const LayerRt& L, int j, int& lo, int& hi) const {
        lo = std::max(0, j * L.geom->stride - L.geom->pad_left);
        hi = std::min(L.geom->in_cols - 1,
                      j * L.geom->stride - L.geom->pad_left + L.geom->kernel - 1);
    }

    bool input_ready(const LayerRt& L) const {
        if (L.done) return false;
        if (L.is_transduction) return true;
        if (L.is_fc) return L.fc_s2_full && L.fc_s2_img == L.img;
        int lo, hi;
        window(L, L.col, lo, hi);
        for (int c = lo; c <= hi; ++c) {
            bool found = false;
            for (const BufCol& b : L.s2) {
                if (b.img == L.img && b.col == c) {
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }

    bool downstream_accepts(int idx) const {
        if (idx + 1 >= static_cast<int>(layers_.size())) return true;
        const LayerRt& D = layers_[idx + 1];
        if (D.is_fc) return !(D.fc_collect_cols == D.geom->in_cols && D.fc_s2_full);
        return !D.s1_full && !D.s1_reserved;
    }

    // A column is dead once its image has passed, or once the window's lower
    // bound has moved beyond it. Geometry can leave trailing input columns no
    // output window ever covers; the hardware column store overwrites them,
    // so the model must not let them pin a FIFO slot.
    bool stale_for(const LayerRt& L, const BufCol& b) const {
        if (L.done || b.img < L.img) return true;
        if (b.img > L.img) return false;
        int lo, hi;
        window(L, L.col, lo, hi);
        return b.col < lo;
    }

    void settle() {
        bool changed = true;
        while (changed) {
            changed = false;
            // stage transfers
            for (LayerRt& L : layers_) {
                if (L.is_transduction) continue;
                if (L.is_fc) {
                    if (L.fc_collect_cols == L.geom->in_cols && !L.fc_s2_full) {
                        L.fc_s2_full = true;
                        L.fc_s2_img = L.fc_collect_img;
                        L.fc_collect_img++;
                        L.fc_collect_cols = 0;
                        changed = true;
                    }
                } else if (L.s1_full) {
                    if (stale_for(L, L.s1_col)) {
                        L.s1_full = false;
                        trace_idx(L, L.s1_col.img, L.s1_col.col, "drop");
                        changed = true;
                    } else if (L.s2.size() < 3) {
                        L.s2.push_back(L.s1_col);
                        L.s1_full = false;
                        trace_idx(L, L.s1_col.img, L.s1_col.col, "transfer");
                        changed = true;
                    }
                }
            }
            // op starts
            for (std::size_t i = 0; i < layers_.size(); ++i) {
                LayerRt& L = layers_[i];
                if (L.running || L.done) continue;
                if (!input_ready(L) || !downstream_accepts(static_cast<int>(i))) continue;
                L.running = true;
                L.op_end = now_ + L.op_cycles;
                if (i + 1 < layers_.size() && !layers_[i + 1].is_fc) {
                    layers_[i + 1].s1_reserved = true;
                }
                tracer_.row(now_, static_cast<int>(i), L.img, L.col, "start");
                changed = true;
            }
        }
    }

    void trace_idx(const LayerRt& L, int img, int col, const char* ev) {
        tracer_.row(now_, static_cast<int>(&L - layers_.data()), img, col, ev);
    }

    SpikeTensor& out_tensor(int idx, int img) {
        auto& per_img = acts_[idx];
        auto it = per_img.find(img);
        if (it == per_img.end()) {
            const LayerGeometry& g = *layers_[idx].geom;
            it = per_img.emplace(img, SpikeTensor::zeros(g.out_rows, g.out_cols, g.out_ch))
                     .first;
        }
        return it->second;
    }

    void compute_column(int idx, int img, int j) {
        LayerRt& L = layers_[idx];
        const LayerGeometry& g = *L.geom;
        const QuantLayer& p = *L.params;
        SpikeTensor& out = out_tensor(idx, img);
        const SpikeTensor* in =
            idx > 0 ? &acts_[idx - 1].at(img) : nullptr;
        bool last = idx + 1 == static_cast<int>(layers_.size());
        long long groups = (g.in_ch + 7) / 8;

        if (L.is_fc) {
            std::vector<std::int32_t> pots;
            if (last) pots.resize(g.out_ch);
            for (int ch = 0; ch < g.out_ch; ++ch) {
                const std::int8_t* w = p.neuron_weights(ch);
                std::int64_t acc = 0;
                for (long long beat = 0; beat < p.beats; ++beat) {
                    long long pos = beat / groups;
                    int gi = static_cast<int>(beat % groups);
                    int r = static_cast<int>(pos / g.in_cols);
                    int c = static_cast<int>(pos % g.in_cols);
                    acc += core_beat(in->byte_at(r, c, gi), w + beat * 8);
                }
                if (last) pots[ch] = static_cast<std::int32_t>(acc);
                if (fire(acc, p.thresholds[ch])) out.set(0, 0, ch, true);
            }
            if (last && img < reported_) final_pots_[img] = std::move(pots);
        } else if (L.is_transduction) {
            const ImageU8& px = images_[img];
            for (int orow = 0; orow < g.out_rows; ++orow) {
                for (int ch = 0; ch < g.out_ch; ++ch) {
                    const std::int8_t* w = p.neuron_weights(ch);
                    std::int64_t acc = 0;
                    for (long long beat = 0; beat < p.beats; ++beat) {
                        long long pos = beat / groups;
                        int gi = static_cast<int>(beat % groups);
                        int kr = static_cast<int>(pos / g.kernel);
                        int kc = static_cast<int>(pos % g.kernel);
                        int r = orow * g.stride - g.pad_top + kr;
                        int c = j * g.stride - g.pad_left + kc;
                        if (r < 0 || r >= g.in_rows || c < 0 || c >= g.in_cols) continue;
                        std::uint8_t pix[8];
                        for (int l = 0; l < 8; ++l) {
                            int ic = gi * 8 + l;
                            pix[l] = ic < g.in_ch ? px.at(r, c, ic) : 0;
                        }
                        acc += transduce_mac(pix, w + beat * 8, 8);
                    }
                    if (fire(acc, p.thresholds[ch])) out.set(orow, j, ch, true);
                }
            }
        } else {
            for (int orow = 0; orow < g.out_rows; ++orow) {
                for (int ch = 0; ch < g.out_ch; ++ch) {
                    const std::int8_t* w = p.neuron_weights(ch);
                    std::int64_t acc = 0;
                    for (long long beat = 0; beat < p.beats; ++beat) {
                        long long pos = beat / groups;
                        int gi = static_cast<int>(beat % groups);
                        int kr = static_cast<int>(pos / g.kernel);
                        int kc = static_cast<int>(pos % g.kernel);
                        int r = orow * g.stride - g.pad_top + kr;
                        int c = j * g.stride - g.pad_left + kc;
                        if (r < 0 || r >= g.in_rows || c < 0 || c >= g.in_cols) continue;
                        acc += core_beat(in->byte_at(r, c, gi), w + beat * 8);
                    }
                    if (fire(acc, p.thresholds[ch])) out.set(orow, j, ch, true);
                }
            }
        }

        // Split layers deliver through the SLR bridge merge; run the real
        // merge datapath over this column and check it reassembles exactly.
        if (L.map->splits.size() > 1) {
            exercise_merge(L, out, j);
        }
    }

    void exercise_merge(LayerRt& L, const SpikeTensor& out, int j) {
        const LayerGeometry& g = *L.geom;
        std::vector<MergeSource> sources;
        int ch0 = 0;
        for (const SlrShare& share : L.map->splits) {
            MergeSource s;
            s.ch_lo = ch0;
            s.ch_hi = ch0 + share.omega_share * L.map->npu;
            s.values.resize(static_cast<std::size_t>(s.ch_hi - s.ch_lo) * g.out_rows);
            for (int ch = s.ch_lo; ch < s.ch_hi; ++ch) {
                for (int r = 0; r < g.out_rows; ++r) {
                    s.values[static_cast<std::size_t>(ch - s.ch_lo) * g.out_rows + r] =
                        out.get(r, j, ch) ? 1 : 0;
                }
            }
            ch0 = s.ch_hi;
            sources.push_back(std::move(s));
        }
        MergedColumn merged = merge_round_robin(sources, g.out_rows, g.out_ch);
        for (int ch = 0; ch < g.out_ch; ++ch) {
            for (int r = 0; r < g.out_rows; ++r) {
                bool v = merged.values[static_cast<std::size_t>(ch) * g.out_rows + r] != 0;
                if (v != out.get(r, j, ch)) {
                    throw SimError("round-robin merge failed to reassemble a column");
                }
            }
        }
    }

    void deliver(int idx, int img, int col) {
        if (idx + 1 >= static_cast<int>(layers_.size())) return;  // sink
        LayerRt& D = layers_[idx + 1];
        if (D.is_fc) {
            D.fc_collect_cols++;
        } else {
            D.s1_reserved = false;
            D.s1_full = true;
            D.s1_col = {img, col};
        }
    }

    void finish(int idx) {
        LayerRt& L = layers_[idx];
        L.running = false;
        int img = L.img, col = L.col;
        compute_column(idx, img, col);
        tracer_.row(now_, idx, img, col, "finish");
        deliver(idx, img, col);

        bool image_done = col + 1 == L.out_cols;
        if (!L.is_transduction && !L.is_fc) {
            if (!image_done) {
                int lo_next, hi_next;
                window(L, col + 1, lo_next, hi_next);
                while (!L.s2.empty() && L.s2.front().img == img &&
                       L.s2.front().col < lo_next) {
                    L.s2.pop_front();
                }
            } else {
                while (!L.s2.empty() && L.s2.front().img == img) L.s2.pop_front();
                trace_idx(L, img, col, "flush");
            }
        }
        if (L.is_fc && image_done) L.fc_s2_full = false;

        if (image_done) {
            // the input map of this image is no longer needed
            if (idx > 0 && !opts_.keep_activations) acts_[idx - 1].erase(img);
            if (idx + 1 == static_cast<int>(layers_.size())) {
                raw_completions_.push_back(now_);
                tracer_.row(now_, idx, img, col, "complete");
                harvest_output(idx, img);
            }
            L.col = 0;
            L.img++;
            if (L.img >= static_cast<int>(images_.size())) L.done = true;
        } else {
            L.col++;
        }
    }

    void harvest_output(int idx, int img) {
        if (img < reported_) {
            final_spikes_[img] = acts_[idx].at(img);
        }
        if (!opts_.keep_activations) acts_[idx].erase(img);
    }

    void account(long long t0, long long t1) {
        if (t1 <= t0) return;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            LayerRt& L = layers_[i];
            int state;
            if (L.running) {
                state = kBusy;
            } else if (!L.done && input_ready(L)) {
                state = kStalled;
            } else {
                state = kIdle;
            }
            if (!L.intervals.empty() && L.intervals.back()[2] == state &&
                L.intervals.back()[1] == t0) {
                L.intervals.back()[1] = t1;
            } else {
                L.intervals.push_back({t0, t1, state});
            }
        }
    }

    [[noreturn]] void dump_deadlock() {
        std::ostringstream msg;
        msg << "pipeline deadlock at cycle " << now_ << ":";
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const LayerRt& L = layers_[i];
            msg << " layer" << i << "{img=" << L.img << ",col=" << L.col
                << ",done=" << L.done << ",s1=" << L.s1_full << "/" << L.s1_reserved
                << ",s2=" << L.s2.size() << ",fc=" << L.fc_collect_cols << "/"
                << L.fc_s2_full << "}";
        }
        throw SimError(msg.str());
    }

    SimReport report() {
        SimReport rep;
        long long total_offset = 0;
        for (const LayerRt& L : layers_) total_offset += L.delivery_offset;

        rep.total_cycles = now_ + total_offset;
        for (std::size_t i = 0; i < raw_completions_.size(); ++i) {
            if (static_cast<int>(i) < reported_) {
                rep.completion_cycles.push_back(raw_completions_[i] + total_offset);
            }
        }
        rep.fill_latency_cycles = raw_completions_.front() + total_offset;
        std::size_t n = raw_completions_.size();
        rep.steady_cycles_per_image =
            n >= 2 ? raw_completions_[n - 1] - raw_completions_[n - 2]
                   : raw_completions_.front() + total_offset;
        rep.fps = net_.clock_mhz * 1e6 /
                  static_cast<double>(rep.steady_cycles_per_image);

        long long win_lo = n >= 2 ? raw_completions_[n - 2] : 0;
        long long win_hi = raw_completions_[n - 1];
        rep.layers.resize(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            LayerRt& L = layers_[i];
            LayerActivity& a = rep.layers[i];
            a.service = static_cast<long long>(L.out_cols) * L.op_cycles;
            a.delivery_offset = L.delivery_offset;
            for (const auto& iv : L.intervals) {
                long long span = iv[1] - iv[0];
                long long wlo = std::max(iv[0], win_lo);
                long long whi = std::min(iv[1], win_hi);
                long long wspan = std::max(0LL, whi - wlo);
                switch (iv[2]) {
                    case kBusy: a.busy += span; a.busy_win += wspan; break;
                    case kStalled: a.stalled += span; a.stalled_win += wspan; break;
                    default: a.idle += span; a.idle_win += wspan; break;
                }
            }
        }

        int best = 0;
        for (std::size_t i = 1; i < rep.layers.size(); ++i) {
            const LayerActivity& a = rep.layers[i];
            const LayerActivity& b = rep.layers[best];
            long long va = a.busy_win + a.stalled_win, vb = b.busy_win + b.stalled_win;
            if (va > vb || (va == vb && a.busy_win > b.busy_win)) {
                best = static_cast<int>(i);
            }
        }
        rep.bottleneck_layer = best;

        rep.final_spikes.reserve(reported_);
        for (int i = 0; i < reported_; ++i) {
            rep.final_spikes.push_back(std::move(final_spikes_[i]));
            auto it = final_pots_.find(i);
            if (it != final_pots_.end()) {
                rep.predicted_class.push_back(classify(it->second));
                rep.final_potentials.push_back(std::move(it->second));
            } else {
                // final layer with spatial extent: flatten positions
                const SpikeTensor& t = rep.final_spikes.back();
                std::vector<std::int32_t> flat;
                flat.reserve(t.bytes.size() * 8);
                for (int r = 0; r < t.rows; ++r) {
                    for (int c = 0; c < t.cols; ++c) {
                        for (int ch = 0; ch < t.channels; ++ch) {
                            flat.push_back(t.get(r, c, ch) ? 1 : 0);
                        }
                    }
                }
                rep.predicted_class.push_back(classify(flat));
                rep.final_potentials.push_back(std::move(flat));
            }
        }

        if (opts_.keep_activations) {
            rep.activations.resize(reported_);
            for (int img = 0; img < reported_; ++img) {
                rep.activations[img].reserve(layers_.size());
                for (std::size_t l = 0; l < layers_.size(); ++l) {
                    rep.activations[img].push_back(acts_[l].at(img));
                }
            }
        }
        return rep;
    }

    const NetworkSpec& net_;
    const std::vector<LayerGeometry>& geoms_;
    const MappingPlan& plan_;
    const QuantModel& model_;
    std::vector<ImageU8> images_;
    const SimOptions& opts_;
    int reported_;

    std::vector<LayerRt> layers_;
    std::vector<std::map<int, SpikeTensor>> acts_;  // [layer][image]
    std::map<int, std::vector<std::int32_t>> final_pots_;
    std::map<int, SpikeTensor> final_spikes_;
    std::vector<long long> raw_completions_;
    long long now_ = 0;
    Tracer tracer_;
};

}  // namespace

SimReport simulate(const NetworkSpec& net, const std::vector<LayerGeometry>& geoms,
                   const MappingPlan& plan, const QuantModel& model,
                   const std::vector<ImageU8>& images, const SimOptions& opts) {
    if (net.layers.empty() || geoms.size() != net.layers.size() ||
        plan.layers.size() != net.layers.size() ||
        model.layers.size() != net.layers.size()) {
        throw SimError("network, geometry, plan and parameters do not line up");
    }
    if (opts.bridge_cycles < 0 || opts.bridge_cycles > 10) {
        throw SimError("SLR bridge latency must be between 0 and 10 cycles");
    }
    if (opts.handshake_cycles < 0 || opts.group_size < 1 ||
        opts.merge_cycles_per_source < 0) {
        throw SimError("simulation options out of range");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerGeometry& g = geoms[i];
        const QuantLayer& q = model.layers[i];
        const LayerMapping& m = plan.layers[i];
        if (q.out_channels != g.out_ch || q.beats != g.beats_per_neuron) {
            throw SimError("parameters for layer " + std::to_string(i) +
                           " do not match the network geometry");
        }
        if (m.omega < 1 || g.out_ch % m.omega != 0 ||
            m.npu != g.out_ch / m.omega) {
            throw SimError("plan for layer " + std::to_string(i) +
                           " does not match the network geometry");
        }
    }

    std::vector<ImageU8> run_images = images;
    if (opts.limit_images > 0 &&
        static_cast<int>(run_images.size()) > opts.limit_images) {
        run_images.resize(opts.limit_images);
    }
    if (run_images.empty()) throw SimError("no input images");
    for (const ImageU8& im : run_images) {
        if (im.rows != net.input.height || im.cols != net.input.width ||
            im.channels != net.input.channels ||
            im.data.size() != static_cast<std::size_t>(im.rows) * im.cols * im.channels) {
            throw SimError("input image shape does not match the network input");
        }
    }
    int reported = static_cast<int>(run_images.size());
    if (run_images.size() == 1) {
        // Timing is data independent: replay the image once so the steady
        // period can be measured between two completions.
        run_images.push_back(run_images.front());
    }

    PipeEngine engine(net, geoms, plan, model, std::move(run_images), opts, reported);
    return engine.run();
}

}  // namespace df2
