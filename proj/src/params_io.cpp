#include "df2/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace df2 {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n, const char* what) {
        if (left < n) {
            throw ParamsIoError(std::string("truncated parameter file while reading ") +
                                what);
        }
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2, left -= 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4, left -= 4;
        return v;
    }
    std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8, left -= 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void bytes(void* dst, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, p, n);
        p += n, left -= n;
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_params(const QuantModel& model,
                                           const std::vector<int>& omegas) {
    if (model.layers.size() != omegas.size()) {
        throw ParamsIoError("one omega per layer is required");
    }
    if (model.layers.empty() || model.layers.size() > 0xffff) {
        throw ParamsIoError("layer count must be between 1 and 65535");
    }
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'D', 'F', '2', 'P'});
    put_u16(out, kParamsVersion);
    put_u16(out, static_cast<std::uint16_t>(model.layers.size()));

    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const QuantLayer& layer = model.layers[li];
        int omega = omegas[li];
        if (omega < 1 || layer.out_channels % omega != 0) {
            throw ParamsIoError("layer " + std::to_string(li) + " omega " +
                                std::to_string(omega) + " does not divide " +
                                std::to_string(layer.out_channels) + " channels");
        }
        if (layer.weights.size() !=
                static_cast<std::size_t>(layer.out_channels) * layer.beats * 8 ||
            layer.thresholds.size() != static_cast<std::size_t>(layer.out_channels)) {
            throw ParamsIoError("layer " + std::to_string(li) +
                                " has inconsistent weight or threshold sizes");
        }
        put_u16(out, static_cast<std::uint16_t>(li));
        put_u32(out, static_cast<std::uint32_t>(layer.out_channels));
        put_u32(out, static_cast<std::uint32_t>(layer.beats));
        put_u16(out, static_cast<std::uint16_t>(omega));
        put_f64(out, layer.scale);

        int npu = layer.out_channels / omega;
        for (int unit = 0; unit < omega; ++unit) {
            for (int n = 0; n < npu; ++n) {
                int ch = unit * npu + n;
                const std::int8_t* w = layer.neuron_weights(ch);
                const std::uint8_t* raw = reinterpret_cast<const std::uint8_t*>(w);
                out.insert(out.end(), raw, raw + layer.beats * 8);
            }
        }
        for (int unit = 0; unit < omega; ++unit) {
            for (int n = 0; n < npu; ++n) {
                put_i32(out, layer.thresholds[unit * npu + n]);
            }
        }
    }
    return out;
}

LoadedParams deserialize_params(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes.data(), bytes.size()};
    r.need(4, "magic");
    if (std::memcmp(r.p, "DF2P", 4) != 0) {
        throw ParamsIoError("bad magic: not a DF2P parameter file");
    }
    r.p += 4, r.left -= 4;
    std::uint16_t version = r.u16("version");
    if (version != kParamsVersion) {
        throw ParamsIoError("unsupported DF2P version " + std::to_string(version) +
                            " (expected " + std::to_string(kParamsVersion) + ")");
    }
    std::uint16_t count = r.u16("layer count");
    if (count == 0) throw ParamsIoError("parameter file has no layers");

    LoadedParams out;
    for (std::uint16_t li = 0; li < count; ++li) {
        std::uint16_t index = r.u16("layer index");
        if (index != li) {
            throw ParamsIoError("layer sub-headers out of order: expected " +
                                std::to_string(li) + ", found " + std::to_string(index));
        }
        QuantLayer layer;
        layer.out_channels = static_cast<int>(r.u32("channel count"));
        layer.beats = r.u32("beat count");
        int omega = r.u16("omega");
        layer.scale = r.f64("scale");
        if (layer.out_channels < 1 || layer.beats < 1 || omega < 1 ||
            layer.out_channels % omega != 0) {
            throw ParamsIoError("layer " + std::to_string(li) +
                                " sub-header is inconsistent");
        }
        layer.weights.resize(static_cast<std::size_t>(layer.out_channels) *
                             layer.beats * 8);
        layer.thresholds.resize(layer.out_channels);

        int npu = layer.out_channels / omega;
        for (int unit = 0; unit < omega; ++unit) {
            for (int n = 0; n < npu; ++n) {
                int ch = unit * npu + n;
                r.bytes(layer.weights.data() +
                            static_cast<std::size_t>(ch) * layer.beats * 8,
                        static_cast<std::size_t>(layer.beats) * 8, "weights");
            }
        }
        for (int unit = 0; unit < omega; ++unit) {
            for (int n = 0; n < npu; ++n) {
                layer.thresholds[unit * npu + n] = r.i32("thresholds");
            }
        }
        out.model.layers.push_back(std::move(layer));
        out.omegas.push_back(omega);
    }
    if (r.left != 0) {
        throw ParamsIoError("trailing bytes after the last layer payload");
    }
    return out;
}

void write_params_file(const std::string& path, const QuantModel& model,
                       const std::vector<int>& omegas) {
    std::vector<std::uint8_t> bytes = serialize_params(model, omegas);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParamsIoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParamsIoError("short write to '" + path + "'");
}

LoadedParams read_params_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParamsIoError("cannot open parameter file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_params(bytes);
}

}  // namespace df2
