#pragma once

#include "cartierlab/module.hpp"

namespace cartierlab {

/// Free Higgs module on the coarse chart ring: rank m with commuting field
/// matrices theta_i against the basis forms.  Integrability is rejected at
/// construction.
class HiggsModule
{
  public:
	Chart chart;
	int m = 1;
	std::vector<RMat> theta; // size n, entries over the coarse ring

	HiggsModule() = default;
	HiggsModule(Chart ch, int rank, std::vector<RMat> th) : chart(ch), m(rank), theta(std::move(th))
	{
		if ((int)theta.size() != chart.n)
			throw Error("higgs field needs one component per coordinate");
		Ring rg = chart.coarse();
		for (auto &t : theta)
		{
			if ((int)t.size() != m)
				throw Error("higgs component has wrong rank");
			for (auto &row : t)
				for (auto &e : row)
					if (e.ring != rg)
						throw Error("higgs component entries must live in the coarse ring");
		}
		for (int i = 0; i < chart.n; ++i)
			for (int j = i + 1; j < chart.n; ++j)
				if (!rmat_is_zero(rmat_sub(rmat_mul(theta[i], theta[j]), rmat_mul(theta[j], theta[i]))))
					throw Error("integrability violated: [theta_" + std::to_string(i + 1) + ", theta_" +
					            std::to_string(j + 1) + "] != 0");
	}

	static HiggsModule trivial(Chart ch, int rank = 1)
	{
		return HiggsModule(ch, rank, std::vector<RMat>(ch.n, rmat_zero(ch.coarse(), rank)));
	}

	bool is_zero_field() const
	{
		for (auto &t : theta)
			if (!rmat_is_zero(t))
				return false;
		return true;
	}

	/// no pole along the divisor: log components divisible by their variable
	bool pole_free() const
	{
		for (int i = 0; i < chart.n; ++i)
		{
			if (!chart.is_log(i))
				continue;
			for (auto &row : theta[i])
				for (auto &e : row)
					for (auto &[ex, c] : e.c)
						if (ex[i] == 0)
							return false;
		}
		return true;
	}
};

/// least L with all (L+1)-fold products of the contracted field operators
/// vanishing; -1 encodes "not nilpotent within level p-1"
inline int nilpotency_level(const HiggsModule &E)
{
	int n = E.chart.n, p = E.chart.p;
	Ring rg = E.chart.coarse();
	// words are multisets since the components commute; extend only by
	// generators with index >= the last one used
	std::vector<std::pair<RMat, int>> cur{{rmat_identity(rg, E.m), 0}};
	for (int len = 1; len <= p; ++len)
	{
		std::vector<std::pair<RMat, int>> next;
		for (auto &[w, last] : cur)
			for (int i = last; i < n; ++i)
			{
				RMat prod = rmat_mul(w, E.theta[i]);
				if (!rmat_is_zero(prod))
					next.push_back({std::move(prod), i});
			}
		if (next.empty())
			return len - 1;
		cur = std::move(next);
	}
	return -1;
}

/// lambda-connection on the free fine-ring module of rank m: the operator
/// against omega_i is lambda * (coefficient derivation) + B_i
struct LambdaConnection
{
	Chart chart;
	int lambda = 1;
	int m = 1;
	std::vector<RMat> B; // fine-ring matrices, one per direction

	Ring ring() const { return chart.fine(); }
};

/// shift the field components by the coefficients of df (sign +1 or -1)
inline HiggsModule twist_exact(const HiggsModule &E, const RingElement &f_coarse, int sign)
{
	if (f_coarse.ring != E.chart.coarse())
		throw Error("higgs twist expects a coarse ring element");
	LogForm df = d_of(E.chart, f_coarse);
	std::vector<RMat> th = E.theta;
	for (int i = 0; i < E.chart.n; ++i)
	{
		auto it = df.comps.find(Subset(1) << i);
		if (it == df.comps.end())
			continue;
		RMat shift = rmat_scale(rmat_identity(E.chart.coarse(), E.m), it->second.scale(sign));
		th[i] = rmat_add(th[i], shift);
	}
	return HiggsModule(E.chart, E.m, std::move(th));
}

inline LambdaConnection twist_exact(const LambdaConnection &H, const RingElement &f_fine, int sign)
{
	if (f_fine.ring != H.chart.fine())
		throw Error("connection twist expects a fine ring element");
	LogForm df = d_of(H.chart, f_fine);
	LambdaConnection out = H;
	for (int i = 0; i < H.chart.n; ++i)
	{
		auto it = df.comps.find(Subset(1) << i);
		if (it == df.comps.end())
			continue;
		RMat shift = rmat_scale(rmat_identity(H.chart.fine(), H.m), it->second.scale(sign));
		out.B[i] = rmat_add(out.B[i], shift);
	}
	return out;
}

} // namespace cartierlab
