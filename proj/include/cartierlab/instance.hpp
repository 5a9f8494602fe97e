#pragma once

#include "cartierlab/homotopy.hpp"

#include <json.hpp>

namespace cartierlab {

using Json = nlohmann::json;

struct ParseError : Error
{
	explicit ParseError(const std::string &msg) : Error(msg) {}
};

/// polynomial encoding: list of [coefficient, [e_1..e_n]] pairs
inline RingElement parse_poly(const Json &j, Ring rg, const std::string &where)
{
	RingElement out(rg);
	if (!j.is_array())
		throw ParseError(where + ": polynomial must be a list of [c, [exponents]] pairs");
	for (auto &term : j)
	{
		if (!term.is_array() || term.size() != 2 || !term[0].is_number_integer() || !term[1].is_array())
			throw ParseError(where + ": malformed polynomial term");
		int c = term[0].get<int>();
		if (c < 0 || c >= rg.p)
			throw ParseError(where + ": coefficients must lie in 0..p-1");
		auto &ev = term[1];
		if ((int)ev.size() != rg.n)
			throw ParseError(where + ": exponent vector needs one entry per coordinate");
		ExpVec e(rg.n);
		for (int i = 0; i < rg.n; ++i)
		{
			int x = ev[i].get<int>();
			if (x < 0)
				throw ParseError(where + ": negative exponent");
			if (x >= rg.cap)
				continue; // truncated away
			e[i] = (uint8_t)x;
		}
		bool alive = true;
		for (int i = 0; i < rg.n; ++i)
			if (ev[i].get<int>() >= rg.cap)
				alive = false;
		if (alive)
			out.add_term(e, c);
	}
	return out;
}

inline Json poly_to_json(const RingElement &x)
{
	Json out = Json::array();
	for (auto &[e, c] : x.c)
	{
		Json ev = Json::array();
		for (auto v : e)
			ev.push_back((int)v);
		out.push_back(Json::array({(int)c, ev}));
	}
	return out;
}

inline Chart parse_chart(const Json &j)
{
	if (!j.is_object())
		throw ParseError("chart: expected an object");
	for (auto &k : {"p", "n", "r", "M"})
		if (!j.contains(k))
			throw ParseError(std::string("chart: missing field ") + k);
	int p = j["p"].get<int>();
	for (int d = 2; d * d <= p; ++d)
		if (p % d == 0)
			throw ParseError("chart: p must be prime");
	if (p < 2)
		throw ParseError("chart: p must be prime");
	int n = j["n"].get<int>();
	if (n < 1)
		throw ParseError("chart: n must be positive");
	try
	{
		return Chart(p, n, j["r"].get<int>(), j["M"].get<int>(), j.value("s", 0));
	}
	catch (const Error &e)
	{
		throw ParseError(std::string("chart: ") + e.what());
	}
}

inline RMat parse_matrix(const Json &j, Ring rg, int m, const std::string &where)
{
	if (!j.is_array() || (int)j.size() != m * m)
		throw ParseError(where + ": matrix must be a row-major list of rank*rank polynomials");
	RMat out = rmat_zero(rg, m);
	for (int i = 0; i < m; ++i)
		for (int k = 0; k < m; ++k)
			out[i][k] = parse_poly(j[i * m + k], rg, where);
	return out;
}

struct Instance
{
	std::string name;
	Chart chart{3, 1, 1, 1};
	HiggsModule higgs;
	LiftingFamily liftings;
	RingElement f; // fine; may be zero
	bool has_f = false;
	std::vector<OrderedSplitting> splittings;
	HodgePair::Type pair_type = HodgePair::Type::I;
	int weight_index = 0;
	int fiber_lambda = 0;
	bool iv_weight_flavor = false;
	uint64_t seed = 0;
	Json plan = Json::array();
	Json raw;
};

inline OrderedSplitting parse_splitting(const Json &j, const Chart &ch, const std::string &where)
{
	if (!j.is_object() || !j.contains("D"))
		throw ParseError(where + ": splitting needs a block map D");
	std::vector<int> D = j["D"].get<std::vector<int>>();
	FpMatrix P = FpMatrix::identity(ch.p, ch.n);
	if (j.contains("P"))
	{
		auto rows = j["P"];
		if ((int)rows.size() != ch.n)
			throw ParseError(where + ": P must be an n-by-n matrix");
		for (int i = 0; i < ch.n; ++i)
		{
			if ((int)rows[i].size() != ch.n)
				throw ParseError(where + ": P must be an n-by-n matrix");
			for (int k = 0; k < ch.n; ++k)
				P(i, k) = (uint8_t)fp_red(rows[i][k].get<int>(), ch.p);
		}
	}
	try
	{
		return OrderedSplitting(ch, D, P);
	}
	catch (const Error &e)
	{
		throw ParseError(where + ": " + e.what());
	}
}

inline HodgePair::Type parse_pair_type(const std::string &s)
{
	if (s == "I")
		return HodgePair::Type::I;
	if (s == "I-weight")
		return HodgePair::Type::IWeight;
	if (s == "II")
		return HodgePair::Type::II;
	if (s == "III")
		return HodgePair::Type::III;
	if (s == "IV")
		return HodgePair::Type::IV;
	throw ParseError("pair_type must be one of I, I-weight, II, III, IV");
}

inline Instance parse_instance(const Json &j)
{
	Instance inst;
	inst.raw = j;
	if (!j.is_object())
		throw ParseError("instance: expected a JSON object");
	inst.name = j.value("name", "unnamed");
	inst.chart = parse_chart(j.at("chart"));
	const Chart &ch = inst.chart;
	int rank = 1;
	std::vector<RMat> theta(ch.n, rmat_zero(ch.coarse(), 1));
	if (j.contains("higgs"))
	{
		auto &h = j["higgs"];
		rank = h.value("rank", 1);
		if (rank < 1)
			throw ParseError("higgs: rank must be positive");
		theta.assign(ch.n, rmat_zero(ch.coarse(), rank));
		if (h.contains("theta"))
		{
			auto &th = h["theta"];
			if ((int)th.size() != ch.n)
				throw ParseError("higgs: theta needs one matrix per coordinate");
			for (int i = 0; i < ch.n; ++i)
				theta[i] = parse_matrix(th[i], ch.coarse(), rank, "higgs.theta[" + std::to_string(i) + "]");
		}
	}
	try
	{
		inst.higgs = HiggsModule(ch, rank, theta);
	}
	catch (const Error &e)
	{
		throw ParseError(e.what()); // constructor diagnostics pass through
	}
	inst.liftings.chart = ch;
	if (j.contains("liftings"))
	{
		for (auto &lj : j["liftings"])
		{
			std::vector<RingElement> wg(ch.n, RingElement::zero(ch.fine()));
			int r = ch.r();
			if (lj.contains("w"))
			{
				auto &w = lj["w"];
				if ((int)w.size() != r)
					throw ParseError("lifting: w needs one entry per log coordinate");
				int at = 0;
				for (int i = 0; i < ch.n; ++i)
					if (ch.is_log(i))
						wg[i] = parse_poly(w[at++], ch.fine(), "lifting.w");
			}
			if (lj.contains("g"))
			{
				auto &g = lj["g"];
				if ((int)g.size() != ch.n - r)
					throw ParseError("lifting: g needs one entry per plain coordinate");
				int at = 0;
				for (int i = 0; i < ch.n; ++i)
					if (!ch.is_log(i))
						wg[i] = parse_poly(g[at++], ch.fine(), "lifting.g");
			}
			inst.liftings.members.emplace_back(ch, wg);
		}
	}
	if (inst.liftings.members.empty())
		inst.liftings.members.push_back(LiftingDatum::standard(ch));
	if (j.contains("f"))
	{
		inst.f = parse_poly(j["f"], ch.fine(), "f");
		inst.has_f = true;
	}
	else
		inst.f = RingElement::zero(ch.fine());
	if (j.contains("splitting"))
		inst.splittings.push_back(parse_splitting(j["splitting"], ch, "splitting"));
	if (j.contains("splitting2"))
		inst.splittings.push_back(parse_splitting(j["splitting2"], ch, "splitting2"));
	if (inst.splittings.empty())
		inst.splittings.push_back(OrderedSplitting::trivial(ch));
	inst.pair_type = parse_pair_type(j.value("pair_type", "I"));
	inst.weight_index = j.value("weight_index", 0);
	inst.fiber_lambda = j.value("fiber_lambda", 0);
	inst.iv_weight_flavor = j.value("iv_weight_flavor", false);
	inst.seed = j.value("seed", 0u);
	if (j.contains("plan"))
	{
		if (!j["plan"].is_array())
			throw ParseError("plan must be a list of checks");
		inst.plan = j["plan"];
	}
	return inst;
}

} // namespace cartierlab
