#pragma once

#include "cartierlab/runner.hpp"

namespace cartierlab {

/// nilpotent field data for the generator: polynomial multiples of powers of
/// one shift matrix commute and respect the level budget
inline Json random_theta_json(const Chart &ch, int rank, int level_budget, std::mt19937_64 &rng,
                              bool pole_free)
{
	Json out = Json::array();
	for (int i = 0; i < ch.n; ++i)
	{
		// theta_i = c(t) * A^k with A the shift; encode as an explicit matrix
		RMat A = rmat_zero(ch.coarse(), rank);
		int kpow = (level_budget >= 1) ? 1 + (int)(rng() % std::max(1, level_budget)) : 0;
		RingElement c = random_poly(ch.coarse(), rng, 2, false);
		if (pole_free && ch.is_log(i))
			c = c.mul_var(i);
		if (kpow >= 1 && !c.is_zero())
			for (int row = 0; row + kpow < rank; ++row)
				A[row][row + kpow] = c;
		Json mat = Json::array();
		for (int row = 0; row < rank; ++row)
			for (int col = 0; col < rank; ++col)
				mat.push_back(poly_to_json(A[row][col]));
		out.push_back(mat);
	}
	return out;
}

inline Json random_lifting_json(const Chart &ch, std::mt19937_64 &rng, bool standard, bool fix_g)
{
	Json out = Json::object();
	Json w = Json::array(), g = Json::array();
	std::vector<RingElement> logs;
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement x = standard ? RingElement::zero(ch.fine()) : random_poly(ch.fine(), rng, 2, false);
		if (ch.is_log(i))
			logs.push_back(x);
		else
			g.push_back(poly_to_json(x));
	}
	if (fix_g && ch.s >= 1 && !standard)
	{
		// the log shadows over the first s coordinates must sum to zero so
		// that the lifting fixes g
		RingElement sum(ch.fine());
		for (int i = 0; i + 1 < ch.s; ++i)
			sum = sum + logs[i];
		if (ch.s >= 1)
			logs[ch.s - 1] = -sum;
	}
	for (auto &x : logs)
		w.push_back(poly_to_json(x));
	out["w"] = w;
	out["g"] = g;
	return out;
}

struct GeneratedInstance
{
	std::string filename;
	Json body;
};

/// deterministic instance corpus per profile; throws on infeasible parameters
inline std::vector<GeneratedInstance> gen_corpus(const std::string &profile, uint64_t seed,
                                                 int level_budget = 1, int count = 0)
{
	std::mt19937_64 rng(seed);
	std::vector<GeneratedInstance> out;
	auto push = [&](const std::string &name, Json body) {
		body["name"] = name;
		body["seed"] = (unsigned)(seed + out.size());
		out.push_back({name + ".json", std::move(body)});
	};
	if (profile == "p3n1")
	{
		if (level_budget >= 3)
			throw Error("level budget must stay below p");
		for (int r = 0; r <= 1; ++r)
			for (int M = 1; M <= 2; ++M)
			{
				Json j;
				j["chart"] = {{"p", 3}, {"n", 1}, {"r", r}, {"M", M}};
				Chart ch(3, 1, r, M);
				j["higgs"] = {{"rank", 2},
				              {"theta", random_theta_json(ch, 2, std::min(level_budget, 1), rng, false)}};
				j["liftings"] = Json::array({random_lifting_json(ch, rng, true, false),
				                             random_lifting_json(ch, rng, false, false)});
				j["plan"] = Json::array({Json{{"check", "cartier_qis"}, {"kind", "full"}},
				                         Json{{"check", "kv_acyclic"}, {"kind", "full"}},
				                         Json{{"check", "infty_homotopy"}},
				                         Json{{"check", "cech_qis"}, {"kind", "full"}},
				                         Json{{"check", "homology"}}});
				push("p3n1-r" + std::to_string(r) + "-M" + std::to_string(M), j);
			}
		return out;
	}
	if (profile == "p5n2b2")
	{
		if (level_budget >= 5)
			throw Error("level budget must stay below p");
		int N = count > 0 ? count : 5;
		for (int k = 0; k < N; ++k)
		{
			Json j;
			j["chart"] = {{"p", 5}, {"n", 2}, {"r", 1}, {"M", 1}};
			Chart ch(5, 2, 1, 1);
			j["higgs"] = {{"rank", 2}, {"theta", random_theta_json(ch, 2, 1, rng, false)}};
			j["liftings"] = Json::array({random_lifting_json(ch, rng, false, false),
			                             random_lifting_json(ch, rng, false, false)});
			j["splitting"] = {{"D", {1, 2}}};
			j["plan"] = Json::array({Json{{"check", "infty_homotopy"}},
			                         Json{{"check", "base_free"}},
			                         Json{{"check", "splitting_homotopy"}, {"o", 1}}});
			push("p5n2b2-" + std::to_string(k), j);
		}
		return out;
	}
	if (profile == "theorem-twist")
	{
		if (level_budget >= 3)
			throw Error("level budget must stay below p");
		int N = count > 0 ? count : 4;
		for (int k = 0; k < N; ++k)
		{
			Json j;
			j["chart"] = {{"p", 3}, {"n", 2}, {"r", 2}, {"M", 1}, {"s", 1}};
			Chart ch(3, 2, 2, 1, 1);
			j["higgs"] = {{"rank", 2}, {"theta", random_theta_json(ch, 2, 1, rng, true)}};
			j["liftings"] = Json::array({random_lifting_json(ch, rng, true, true)});
			j["f"] = poly_to_json(random_poly(ch.fine(), rng, 3, true));
			j["plan"] = Json::array({Json{{"check", "artin_hasse"}, {"count", 10}},
			                         Json{{"check", "theta_deformation"}},
			                         Json{{"check", "twisted_qis"}, {"kind", "full"}},
			                         Json{{"check", "twisted_qis"}, {"kind", "intersection"}},
			                         Json{{"check", "exp_twist_table"}}});
			push("theorem-twist-" + std::to_string(k), j);
		}
		return out;
	}
	throw Error("unknown profile: " + profile + " (available: p3n1, p5n2b2, theorem-twist)");
}

} // namespace cartierlab
