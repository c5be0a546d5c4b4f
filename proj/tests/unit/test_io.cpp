#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "veritas/error.hpp"
#include "veritas/io.hpp"

using namespace veritas;

TEST_SUITE("io") {

TEST_CASE("log round trip") {
    SessionLog log;
    log.delay_s = 0.08;
    log.chunk_duration_s = 2.0;
    TcpState w = testing::tcp(37, 0.08, 1.25, 64);
    w.srtt_s = 0.09;
    log.chunks = {testing::chunk(1, 123456, 0.0, 0.75, w), testing::chunk(2, 654321, 1.5, 3.125, w)};
    log.chunks[1].quality = 3;
    log.chunks[1].buffer_at_start_s = 1.25;
    std::stringstream ss;
    io::write_log(ss, log);
    CHECK(io::read_log(ss) == log);
}

TEST_CASE("round trip is stable at nine digits") {
    SessionLog log;
    log.chunks = {testing::chunk(1, 1000, 0.1234567891234, 1.98765432198765)};
    std::stringstream a, b;
    io::write_log(a, log);
    const SessionLog once = io::read_log(a);
    io::write_log(b, once);
    std::stringstream c(b.str());
    CHECK(io::read_log(c) == once);
}

TEST_CASE("end before start is an invariant error naming the chunk") {
    std::stringstream ss;
    ss << R"({"format":"veritas-log/1","delay_s":0.08,"chunk_duration_s":2})" << "\n"
       << R"({"n":1,"size_bytes":1000,"start_s":0,"end_s":1,"quality":0,"buffer_s":0,"tcp":{"cwnd":10,"ssthresh":64,"rto_s":0.2,"min_rtt_s":0.08,"last_send_s":0,"srtt_s":0.08}})"
       << "\n"
       << R"({"n":2,"size_bytes":1000,"start_s":3,"end_s":3,"quality":0,"buffer_s":0,"tcp":{"cwnd":10,"ssthresh":64,"rto_s":0.2,"min_rtt_s":0.08,"last_send_s":0,"srtt_s":0.08}})"
       << "\n";
    try {
        io::read_log(ss);
        FAIL("expected an invariant error");
    } catch (const InvariantError& e) {
        CHECK(std::string(e.what()).find("chunk 2") != std::string::npos);
    }
}

TEST_CASE("missing tcp is a parse error with a line number") {
    std::stringstream ss;
    ss << R"({"format":"veritas-log/1","delay_s":0.08,"chunk_duration_s":2})" << "\n"
       << R"({"n":1,"size_bytes":1000,"start_s":0,"end_s":1,"quality":0,"buffer_s":0})" << "\n";
    try {
        io::read_log(ss);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("tcp") != std::string::npos);
    }
}

TEST_CASE("malformed input") {
    std::stringstream empty;
    CHECK_THROWS_AS(io::read_log(empty), ParseError);
    std::stringstream bad_json("{\"format\":\"veritas-log/1\",\"delay_s\":0.08,\"chunk_duration_s\":2}\n{oops\n");
    CHECK_THROWS_AS(io::read_log(bad_json), ParseError);
    std::stringstream wrong_format("{\"format\":\"other\",\"delay_s\":0.08,\"chunk_duration_s\":2}\n");
    CHECK_THROWS_AS(io::read_log(wrong_format), ParseError);
}

TEST_CASE("trace csv round trip and spacing check") {
    const CapacityTrace tr(QuantGrid{}, {1.5, 0.0, 7.25});
    std::stringstream ss;
    io::write_trace_csv(ss, tr);
    CHECK(ss.str() == "window_start_s,mbps\n0,1.5\n5,0\n10,7.25\n");
    std::stringstream in(ss.str());
    CHECK(io::read_trace_csv(in, QuantGrid{}) == tr);

    std::stringstream uneven("window_start_s,mbps\n0,1\n5,2\n11,3\n");
    CHECK_THROWS_AS(io::read_trace_csv(uneven, QuantGrid{}), ParseError);
    std::stringstream header("t,c\n0,1\n");
    CHECK_THROWS_AS(io::read_trace_csv(header, QuantGrid{}), ParseError);
    std::stringstream negative("window_start_s,mbps\n0,-1\n");
    CHECK_THROWS_AS(io::read_trace_csv(negative, QuantGrid{}), ParseError);
}

TEST_CASE("files") {
    const auto dir = std::filesystem::temp_directory_path() / "veritas_io_test";
    std::filesystem::remove_all(dir);
    SessionLog log;
    log.chunks = {testing::chunk(1, 1000, 0.0, 1.0)};
    io::write_log(dir / "nested" / "a.jsonl", log);
    CHECK(io::read_log(dir / "nested" / "a.jsonl") == log);
    CHECK_THROWS_AS(io::read_log(dir / "missing.jsonl"), Error);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
