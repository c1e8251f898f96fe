#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "remnet/checkpoint.hpp"
#include "remnet/model.hpp"
#include "test_support.hpp"

using namespace remnet;

namespace {

net::NetworkConfig tiny_config() {
    net::NetworkConfig cfg;
    cfg.class_count = 4;
    cfg.width_scale = 1.0 / 64.0;
    return cfg;
}

}  // namespace

TEST_CASE("checkpoint round trip is bitwise exact") {
    const std::string dir = test_support::scratch_dir("ckpt_roundtrip");
    net::Network source(tiny_config(), 11);
    const nlohmann::json meta = {{"epoch", 3}, {"val_xent", 0.25}, {"seed", 11}};
    ckpt::save(dir + "/model.rmck", source.parameters(), meta);

    net::Network target(tiny_config(), 999);  // different init, same shapes
    const nlohmann::json loaded = ckpt::load_into(dir + "/model.rmck", target.parameters());
    CHECK(loaded.at("epoch").get<int>() == 3);
    CHECK(loaded.at("val_xent").get<double>() == 0.25);

    auto src_params = source.parameters();
    auto dst_params = target.parameters();
    REQUIRE(src_params.size() == dst_params.size());
    for (std::size_t i = 0; i < src_params.size(); ++i) {
        CHECK(src_params[i].name == dst_params[i].name);
        CHECK(src_params[i].tensor->values() == dst_params[i].tensor->values());
    }
}

TEST_CASE("checkpoint rejects a mismatched architecture naming the tensor") {
    const std::string dir = test_support::scratch_dir("ckpt_mismatch");
    net::Network source(tiny_config(), 5);
    ckpt::save(dir + "/model.rmck", source.parameters(), {{"epoch", 1}});

    net::NetworkConfig wider = tiny_config();
    wider.width_scale = 1.0 / 8.0;
    net::Network target(wider, 5);
    try {
        ckpt::load_into(dir + "/model.rmck", target.parameters());
        FAIL("expected a shape mismatch error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("shape mismatch") != std::string::npos);
        CHECK(msg.find("pre.block0") != std::string::npos);  // names the offender
    }
}

TEST_CASE("checkpoint load reports truncated files") {
    const std::string dir = test_support::scratch_dir("ckpt_truncated");
    net::Network source(tiny_config(), 7);
    ckpt::save(dir + "/model.rmck", source.parameters(), {{"epoch", 1}});

    std::ifstream in(dir + "/model.rmck", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bytes.resize(bytes.size() / 2);
    std::ofstream out(dir + "/broken.rmck", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();

    CHECK_THROWS_AS(ckpt::read_all(dir + "/broken.rmck"), std::runtime_error);
}

TEST_CASE("checkpoint rejects files with a foreign magic") {
    const std::string dir = test_support::scratch_dir("ckpt_magic");
    std::ofstream out(dir + "/not_a_checkpoint.rmck", std::ios::binary);
    out << "definitely not a checkpoint";
    out.close();
    CHECK_THROWS_AS(ckpt::read_all(dir + "/not_a_checkpoint.rmck"), std::runtime_error);
}

TEST_CASE("running statistics are stored alongside trained parameters") {
    const std::string dir = test_support::scratch_dir("ckpt_stats");
    net::Network source(tiny_config(), 13);
    auto params = source.parameters();
    bool has_running = false;
    for (const auto& p : params) {
        if (p.name.find("running_mean") != std::string::npos) {
            has_running = true;
            CHECK_FALSE(p.trainable);
        }
    }
    CHECK(has_running);

    ckpt::save(dir + "/model.rmck", params, {{"epoch", 1}});
    const auto [tensors, meta] = ckpt::read_all(dir + "/model.rmck");
    CHECK(tensors.size() == params.size());
}
