#include "df2/images_io.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace df2 {

namespace {

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImagesIoError("cannot open image file '" + path + "'");
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return buf;
}

// Minimal parser for the numpy array format, u8 arrays only.
struct NpyHeader {
    std::vector<long long> shape;
    std::size_t data_offset = 0;
};

NpyHeader parse_npy_header(const std::vector<std::uint8_t>& buf) {
    static const char magic[] = "\x93NUMPY";
    if (buf.size() < 10 || std::memcmp(buf.data(), magic, 6) != 0) {
        throw ImagesIoError("not a numpy array file");
    }
    int major = buf[6];
    std::size_t header_len, header_off;
    if (major == 1) {
        header_len = buf[8] | (buf[9] << 8);
        header_off = 10;
    } else if (major == 2 || major == 3) {
        if (buf.size() < 12) throw ImagesIoError("truncated numpy header");
        header_len = static_cast<std::size_t>(buf[8]) | (buf[9] << 8) |
                     (static_cast<std::size_t>(buf[10]) << 16) |
                     (static_cast<std::size_t>(buf[11]) << 24);
        header_off = 12;
    } else {
        throw ImagesIoError("unsupported numpy format version");
    }
    if (buf.size() < header_off + header_len) {
        throw ImagesIoError("truncated numpy header");
    }
    std::string hdr(reinterpret_cast<const char*>(buf.data()) + header_off, header_len);

    if (hdr.find("'|u1'") == std::string::npos &&
        hdr.find("'uint8'") == std::string::npos &&
        hdr.find("'u1'") == std::string::npos) {
        throw ImagesIoError("numpy array must have dtype uint8");
    }
    if (hdr.find("'fortran_order': True") != std::string::npos) {
        throw ImagesIoError("fortran-ordered numpy arrays are not supported");
    }
    std::size_t sp = hdr.find("'shape':");
    if (sp == std::string::npos) throw ImagesIoError("numpy header missing shape");
    std::size_t lp = hdr.find('(', sp);
    std::size_t rp = hdr.find(')', sp);
    if (lp == std::string::npos || rp == std::string::npos || rp < lp) {
        throw ImagesIoError("malformed numpy shape");
    }
    NpyHeader out;
    std::string tup = hdr.substr(lp + 1, rp - lp - 1);
    std::stringstream ss(tup);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t a = tok.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        out.shape.push_back(std::stoll(tok.substr(a)));
    }
    out.data_offset = header_off + header_len;
    return out;
}

}  // namespace

std::vector<ImageU8> load_images_npy(const std::string& path, const InputShape& shape) {
    std::vector<std::uint8_t> buf = read_all(path);
    NpyHeader hdr = parse_npy_header(buf);

    long long n = 1, h, w, c;
    if (hdr.shape.size() == 4) {
        n = hdr.shape[0];
        h = hdr.shape[1];
        w = hdr.shape[2];
        c = hdr.shape[3];
    } else if (hdr.shape.size() == 3) {
        h = hdr.shape[0];
        w = hdr.shape[1];
        c = hdr.shape[2];
    } else {
        throw ImagesIoError("numpy array must be (H,W,C) or (N,H,W,C)");
    }
    if (h != shape.height || w != shape.width || c != shape.channels) {
        std::ostringstream msg;
        msg << "image shape " << h << "x" << w << "x" << c
            << " does not match network input " << shape.height << "x" << shape.width
            << "x" << shape.channels;
        throw ImagesIoError(msg.str());
    }
    std::size_t per = static_cast<std::size_t>(h) * w * c;
    if (buf.size() - hdr.data_offset < per * n) {
        throw ImagesIoError("numpy file is shorter than its declared shape");
    }
    std::vector<ImageU8> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        ImageU8 im;
        im.rows = static_cast<int>(h);
        im.cols = static_cast<int>(w);
        im.channels = static_cast<int>(c);
        const std::uint8_t* p = buf.data() + hdr.data_offset + per * i;
        im.data.assign(p, p + per);
        out.push_back(std::move(im));
    }
    return out;
}

std::vector<ImageU8> load_images_raw(const std::string& path, const InputShape& shape) {
    std::vector<std::uint8_t> buf = read_all(path);
    std::size_t per = static_cast<std::size_t>(shape.height) * shape.width *
                      shape.channels;
    if (buf.empty() || buf.size() % per != 0) {
        throw ImagesIoError("raw image file size is not a multiple of one image (" +
                            std::to_string(per) + " bytes)");
    }
    std::vector<ImageU8> out;
    out.reserve(buf.size() / per);
    for (std::size_t off = 0; off < buf.size(); off += per) {
        ImageU8 im;
        im.rows = shape.height;
        im.cols = shape.width;
        im.channels = shape.channels;
        im.data.assign(buf.begin() + off, buf.begin() + off + per);
        out.push_back(std::move(im));
    }
    return out;
}

std::vector<ImageU8> load_images(const std::string& path, const InputShape& shape) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".npy") == 0) {
        return load_images_npy(path, shape);
    }
    return load_images_raw(path, shape);
}

std::vector<ImageU8> random_images(std::uint64_t seed, const InputShape& shape,
                                   int count) {
    if (count < 1) throw ImagesIoError("image count must be positive");
    std::mt19937_64 rng(seed);
    std::vector<ImageU8> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        ImageU8 im;
        im.rows = shape.height;
        im.cols = shape.width;
        im.channels = shape.channels;
        im.data.resize(static_cast<std::size_t>(im.rows) * im.cols * im.channels);
        for (std::uint8_t& b : im.data) {
            b = static_cast<std::uint8_t>(rng() & 0xFF);
        }
        out.push_back(std::move(im));
    }
    return out;
}

}  // namespace df2
