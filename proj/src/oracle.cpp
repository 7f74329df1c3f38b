#include "df2/oracle.hpp"

namespace df2 {

namespace {

// Packed-weight lookup written out from the storage layout definition:
// beat = position * ceil(in_ch/8) + ic/8, lane = ic%8.
int packed_weight(const QuantLayer& layer, int ch, long long position, int ic,
                  int in_ch) {
    long long groups = (in_ch + 7) / 8;
    long long beat = position * groups + ic / 8;
    return layer.weights[(static_cast<std::size_t>(ch) * layer.beats + beat) * 8 +
                         ic % 8];
}

}  // namespace

OracleResult reference_inference(const NetworkSpec& net,
                                 const std::vector<LayerGeometry>& geoms,
                                 const QuantModel& model, const ImageU8& image) {
    OracleResult res;
    res.activations.reserve(net.layers.size());

    const SpikeTensor* prev = nullptr;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerSpec& spec = net.layers[li];
        const LayerGeometry& g = geoms[li];
        const QuantLayer& params = model.layers[li];
        SpikeTensor out = SpikeTensor::zeros(g.out_rows, g.out_cols, g.out_ch);
        bool last = li + 1 == net.layers.size();
        if (last) {
            res.final_potentials.assign(
                static_cast<std::size_t>(g.out_rows) * g.out_cols * g.out_ch, 0);
        }

        for (int orow = 0; orow < g.out_rows; ++orow) {
            for (int ocol = 0; ocol < g.out_cols; ++ocol) {
                for (int ch = 0; ch < g.out_ch; ++ch) {
                    long long acc = 0;
                    if (spec.kind == LayerKind::FullyConnected) {
                        for (int r = 0; r < g.in_rows; ++r) {
                            for (int c = 0; c < g.in_cols; ++c) {
                                long long pos = static_cast<long long>(r) * g.in_cols + c;
                                for (int ic = 0; ic < g.in_ch; ++ic) {
                                    if (prev->get(r, c, ic)) {
                                        acc += packed_weight(params, ch, pos, ic, g.in_ch);
                                    }
                                }
                            }
                        }
                    } else {
                        for (int kr = 0; kr < g.kernel; ++kr) {
                            for (int kc = 0; kc < g.kernel; ++kc) {
                                int r = orow * g.stride - g.pad_top + kr;
                                int c = ocol * g.stride - g.pad_left + kc;
                                if (r < 0 || r >= g.in_rows || c < 0 || c >= g.in_cols) {
                                    continue;
                                }
                                long long pos = static_cast<long long>(kr) * g.kernel + kc;
                                for (int ic = 0; ic < g.in_ch; ++ic) {
                                    if (spec.kind == LayerKind::TransductionConv) {
                                        int px = image.at(r, c, ic);
                                        if (px) {
                                            acc += static_cast<long long>(px) *
                                                   packed_weight(params, ch, pos, ic,
                                                                 g.in_ch);
                                        }
                                    } else if (prev->get(r, c, ic)) {
                                        acc += packed_weight(params, ch, pos, ic, g.in_ch);
                                    }
                                }
                            }
                        }
                    }
                    if (last) {
                        res.final_potentials[(static_cast<std::size_t>(orow) * g.out_cols +
                                              ocol) *
                                                 g.out_ch +
                                             ch] = static_cast<std::int32_t>(acc);
                    }
                    if (acc > params.thresholds[ch]) out.set(orow, ocol, ch, true);
                }
            }
        }
        res.activations.push_back(std::move(out));
        prev = &res.activations.back();
    }
    res.predicted_class = argmax_class(res.final_potentials);
    return res;
}

long long count_macs(const std::vector<LayerGeometry>& geoms) {
    long long total = 0;
    for (const LayerGeometry& g : geoms) {
        long long positions = static_cast<long long>(g.out_rows) * g.out_cols;
        total += positions * g.out_ch * g.fan_in;
    }
    return total;
}

long long count_ops(const std::vector<LayerGeometry>& geoms) {
    return 2 * count_macs(geoms);
}

int argmax_class(const std::vector<std::int32_t>& potentials) {
    int best = 0;
    for (std::size_t i = 1; i < potentials.size(); ++i) {
        if (potentials[i] > potentials[best]) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace df2
