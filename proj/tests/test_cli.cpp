#include "cartierlab/gen.hpp"
#include "cartierlab/runner.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <fstream>

using namespace cartierlab;

namespace {

Json load(const std::string &name)
{
	std::ifstream in(std::string(CARTIERLAB_INSTANCE_DIR) + "/" + name);
	REQUIRE(in.good());
	Json j;
	in >> j;
	return j;
}

} // namespace

TEST_CASE("instance parsing")
{
	SECTION("minimal instance")
	{
		Json j = {{"chart", {{"p", 3}, {"n", 1}, {"r", 1}, {"M", 1}}}};
		Instance inst = parse_instance(j);
		REQUIRE(inst.higgs.m == 1);
		REQUIRE(inst.liftings.size() == 1);
		REQUIRE(inst.liftings[0].is_standard());
	}
	SECTION("schema violations are parse errors")
	{
		REQUIRE_THROWS_AS(parse_instance(Json::array()), ParseError);
		REQUIRE_THROWS_AS(parse_instance(Json{{"chart", {{"p", 4}, {"n", 1}, {"r", 0}, {"M", 1}}}}),
		                  ParseError);
		REQUIRE_THROWS_AS(parse_instance(Json{{"chart", {{"p", 3}, {"n", 1}, {"r", 2}, {"M", 1}}}}),
		                  ParseError);
		Json bad = {{"chart", {{"p", 3}, {"n", 1}, {"r", 1}, {"M", 1}}},
		            {"f", Json::array({Json::array({5, Json::array({0})})})}};
		REQUIRE_THROWS_AS(parse_instance(bad), ParseError);
	}
	SECTION("cross-reference validation")
	{
		Json j = {{"chart", {{"p", 3}, {"n", 2}, {"r", 1}, {"M", 1}}},
		          {"splitting", {{"D", {2, 1}}}}};
		REQUIRE_THROWS_AS(parse_instance(j), ParseError);
		Json j2 = {{"chart", {{"p", 3}, {"n", 1}, {"r", 0}, {"M", 1}, {"s", 1}}}};
		REQUIRE_THROWS_AS(parse_instance(j2), ParseError); // s > r
	}
	SECTION("corrupted field data surfaces the constructor diagnostic")
	{
		Json j = load("corrupted-integrability.json");
		REQUIRE_THROWS_WITH(parse_instance(j), Catch::Matchers::ContainsSubstring("integrability violated"));
	}
}

TEST_CASE("bundled instances run clean")
{
	for (auto name : {"deligne-illusie-p3.json", "theorem-twist-p3.json", "splitting-p5.json",
	                  "fiber-pair-p3.json", "kunneth-p3.json"})
	{
		INFO(name);
		Instance inst = parse_instance(load(name));
		Report rep = run_instance(inst);
		for (auto &row : rep.rows)
		{
			INFO(row.check + ": " + row.witness);
			REQUIRE(row.pass);
		}
		REQUIRE(rep.all_pass());
	}
}

TEST_CASE("deliberate failure carries a witness")
{
	Instance inst = parse_instance(load("failing-stratum.json"));
	Report rep = run_instance(inst);
	REQUIRE_FALSE(rep.all_pass());
	REQUIRE(rep.rows.size() == 1);
	REQUIRE_THAT(rep.rows[0].witness, Catch::Matchers::ContainsSubstring("degree"));
}

TEST_CASE("reports are byte stable")
{
	Instance inst = parse_instance(load("deligne-illusie-p3.json"));
	Report a = run_instance(inst);
	Report b = run_instance(inst);
	REQUIRE(report_json(a).dump() == report_json(b).dump());
	REQUIRE(report_text(a) == report_text(b));
}

TEST_CASE("corpus generation")
{
	SECTION("deterministic for a fixed seed")
	{
		auto a = gen_corpus("p3n1", 0);
		auto b = gen_corpus("p3n1", 0);
		REQUIRE(a.size() == b.size());
		for (size_t i = 0; i < a.size(); ++i)
		{
			REQUIRE(a[i].filename == b[i].filename);
			REQUIRE(a[i].body.dump() == b[i].body.dump());
		}
		REQUIRE(fnv_digest(a[0].body.dump()) == fnv_digest(b[0].body.dump()));
	}
	SECTION("level budget at or above p is rejected")
	{
		REQUIRE_THROWS_AS(gen_corpus("p3n1", 0, 3), Error);
	}
	SECTION("generated instances pass constructor validation and their plans")
	{
		for (auto &gi : gen_corpus("p3n1", 42))
		{
			Instance inst = parse_instance(gi.body);
			Report rep = run_instance(inst);
			INFO(gi.filename);
			REQUIRE(rep.all_pass());
		}
	}
	SECTION("p5 corpus is constructor-valid")
	{
		auto corpus = gen_corpus("p5n2b2", 1, 1, 3);
		REQUIRE(corpus.size() == 3);
		for (auto &gi : corpus)
			REQUIRE_NOTHROW(parse_instance(gi.body));
	}
}
