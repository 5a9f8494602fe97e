// Batch driver: parse instance files, run verification plans, emit
// deterministic reports.  Exit codes: 0 all checks pass, 1 a check failed,
// 2 input or validation error.

#include "cartierlab/gen.hpp"
#include "cartierlab/runner.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace cartierlab;

namespace {

int run_verify(const std::string &path, const std::string &format, const std::string &out_path)
{
	Json j;
	{
		std::ifstream in(path);
		if (!in)
		{
			std::cerr << "error: cannot open " << path << "\n";
			return 2;
		}
		try
		{
			in >> j;
		}
		catch (const std::exception &e)
		{
			std::cerr << "error: " << path << ": " << e.what() << "\n";
			return 2;
		}
	}
	Instance inst;
	try
	{
		inst = parse_instance(j);
	}
	catch (const std::exception &e)
	{
		std::cerr << "error: " << path << ": " << e.what() << "\n";
		return 2;
	}
	Report rep;
	auto t0 = std::chrono::steady_clock::now();
	try
	{
		rep = run_instance(inst);
	}
	catch (const ParseError &e)
	{
		std::cerr << "error: " << path << ": " << e.what() << "\n";
		return 2;
	}
	catch (const Error &e)
	{
		std::cerr << "error: " << path << ": " << e.what() << "\n";
		return 2;
	}
	auto t1 = std::chrono::steady_clock::now();
	std::string body = (format == "json") ? report_json(rep).dump(2) + "\n" : report_text(rep);
	if (out_path.empty())
		std::cout << body;
	else
	{
		std::ofstream out(out_path);
		out << body;
	}
	std::cerr << "elapsed: " << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
	          << " ms\n";
	return rep.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"exact verification of de Rham-Higgs comparison identities on truncated charts"};
	app.require_subcommand(1);

	std::string verify_file, verify_format = "text", verify_out;
	auto *verify = app.add_subcommand("verify", "run the verification plan of an instance file");
	verify->add_option("file", verify_file, "instance file")->required();
	verify->add_option("--format", verify_format, "report format (text|json)")
	    ->check(CLI::IsMember({"text", "json"}));
	verify->add_option("--out", verify_out, "write the report to a file instead of stdout");

	std::string report_file, report_format = "json";
	auto *report = app.add_subcommand("report", "run a plan and print only the report");
	report->add_option("file", report_file, "instance file")->required();
	report->add_option("--format", report_format, "report format (text|json)")
	    ->check(CLI::IsMember({"text", "json"}));

	std::string gen_profile = "p3n1", gen_out = ".";
	uint64_t gen_seed = 0;
	int gen_level = 1, gen_count = 0;
	auto *gen = app.add_subcommand("gen", "generate a deterministic instance corpus");
	gen->add_option("--seed", gen_seed, "corpus seed");
	gen->add_option("--profile", gen_profile, "corpus profile");
	gen->add_option("--out", gen_out, "output directory");
	gen->add_option("--level", gen_level, "nilpotency level budget (must stay below p)");
	gen->add_option("--count", gen_count, "instance count for randomized profiles");

	CLI11_PARSE(app, argc, argv);

	if (verify->parsed())
		return run_verify(verify_file, verify_format, verify_out);
	if (report->parsed())
		return run_verify(report_file, report_format, "");
	if (gen->parsed())
	{
		try
		{
			auto corpus = gen_corpus(gen_profile, gen_seed, gen_level, gen_count);
			std::filesystem::create_directories(gen_out);
			for (auto &inst : corpus)
			{
				std::ofstream out(std::filesystem::path(gen_out) / inst.filename);
				out << inst.body.dump(2) << "\n";
				std::cout << inst.filename << "\n";
			}
		}
		catch (const std::exception &e)
		{
			std::cerr << "error: " << e.what() << "\n";
			return 2;
		}
		return 0;
	}
	return 2;
}
