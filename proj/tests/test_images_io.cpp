#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "df2/images_io.hpp"

using namespace df2;

namespace {

// A real numpy header for a (2, 2, 3, 1) uint8 array, format version 1.0.
void write_npy(const char* path, const std::string& dict,
               const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary);
    std::string header = dict;
    std::size_t unpadded = 10 + header.size() + 1;
    header.append(64 * ((unpadded + 63) / 64) - unpadded, ' ');
    header.push_back('\n');
    out << "\x93NUMPY";
    out.put(1);
    out.put(0);
    out.put(static_cast<char>(header.size() & 0xFF));
    out.put(static_cast<char>(header.size() >> 8));
    out << header;
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST_CASE("npy loader reads single and batched u8 tensors") {
    const char* path = "images_io_test.npy";
    InputShape shape{2, 3, 1};

    std::vector<std::uint8_t> frame = {1, 2, 3, 4, 5, 6};
    write_npy(path, "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3, 1), }",
              frame);
    std::vector<ImageU8> imgs = load_images(path, shape);
    REQUIRE(imgs.size() == 1);
    CHECK(imgs[0].at(0, 0, 0) == 1);
    CHECK(imgs[0].at(1, 2, 0) == 6);

    std::vector<std::uint8_t> batch = frame;
    batch.insert(batch.end(), {10, 20, 30, 40, 50, 60});
    write_npy(path,
              "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 2, 3, 1), }",
              batch);
    imgs = load_images(path, shape);
    REQUIRE(imgs.size() == 2);
    CHECK(imgs[1].at(0, 0, 0) == 10);
    std::remove(path);
}

TEST_CASE("npy loader rejects wrong dtype, order, and shape") {
    const char* path = "images_io_bad.npy";
    InputShape shape{2, 3, 1};
    std::vector<std::uint8_t> frame(6, 0);

    write_npy(path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 1), }",
              frame);
    CHECK_THROWS_AS(load_images_npy(path, shape), ImagesIoError);

    write_npy(path, "{'descr': '|u1', 'fortran_order': True, 'shape': (2, 3, 1), }",
              frame);
    CHECK_THROWS_AS(load_images_npy(path, shape), ImagesIoError);

    write_npy(path, "{'descr': '|u1', 'fortran_order': False, 'shape': (3, 3, 1), }",
              frame);
    CHECK_THROWS_AS(load_images_npy(path, shape), ImagesIoError);

    write_npy(path, "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3, 1), }",
              {1, 2, 3});  // shorter than the shape claims
    CHECK_THROWS_AS(load_images_npy(path, shape), ImagesIoError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "not an array";
    }
    CHECK_THROWS_AS(load_images_npy(path, shape), ImagesIoError);
    std::remove(path);
}

TEST_CASE("raw loader slices whole frames") {
    const char* path = "images_io_test.raw";
    InputShape shape{2, 2, 1};
    {
        std::ofstream out(path, std::ios::binary);
        for (int i = 0; i < 8; ++i) out.put(static_cast<char>(i));
    }
    std::vector<ImageU8> imgs = load_images(path, shape);
    REQUIRE(imgs.size() == 2);
    CHECK(imgs[0].at(0, 0, 0) == 0);
    CHECK(imgs[1].at(0, 0, 0) == 4);

    {
        std::ofstream out(path, std::ios::binary);
        out << "12345";  // not a multiple of 4
    }
    CHECK_THROWS_AS(load_images_raw(path, shape), ImagesIoError);
    std::remove(path);
    CHECK_THROWS_AS(load_images("missing.raw", shape), ImagesIoError);
}

TEST_CASE("random images are deterministic in the seed") {
    InputShape shape{4, 4, 3};
    std::vector<ImageU8> a = random_images(9, shape, 2);
    std::vector<ImageU8> b = random_images(9, shape, 2);
    std::vector<ImageU8> c = random_images(10, shape, 2);
    REQUIRE(a.size() == 2);
    CHECK(a[0].data == b[0].data);
    CHECK(a[1].data == b[1].data);
    CHECK(a[0].data != c[0].data);
    CHECK(a[0].data.size() == 48);
    CHECK_THROWS_AS(random_images(1, shape, 0), ImagesIoError);
}
