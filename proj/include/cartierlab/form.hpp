#pragma once

#include "cartierlab/ring.hpp"

#include <bit>

namespace cartierlab {

/// Index subsets of {0..n-1} as bitmasks.
using Subset = uint32_t;

inline int subset_size(Subset s) { return std::popcount(s); }

inline std::vector<int> subset_elems(Subset s)
{
	std::vector<int> v;
	for (int i = 0; s; ++i, s >>= 1)
		if (s & 1)
			v.push_back(i);
	return v;
}

inline Subset subset_of(const std::vector<int> &v)
{
	Subset s = 0;
	for (int i : v)
		s |= (Subset(1) << i);
	return s;
}

/// sign of sorting i into the ordered set I (i not in I); counts members of I
/// below i
inline int insert_sign(int i, Subset I)
{
	int below = std::popcount(I & ((Subset(1) << i) - 1));
	return (below % 2) ? -1 : 1;
}

/// sign of merging two disjoint ordered sets A then B into sorted order
inline int merge_sign(Subset A, Subset B)
{
	int sgn = 1;
	for (int b : subset_elems(B))
	{
		int above = std::popcount(A >> (b + 1));
		if (above % 2)
			sgn = -sgn;
	}
	return sgn;
}

inline std::string subset_str(Subset s)
{
	std::string out = "{";
	bool first = true;
	for (int i : subset_elems(s))
	{
		if (!first)
			out += ",";
		first = false;
		out += std::to_string(i + 1);
	}
	return out + "}";
}

/// A q-form on a chart: sparse map from q-subsets of the basis
/// (dlog t_i for log coordinates, dt_i otherwise) to ring coefficients.
class LogForm
{
  public:
	Chart chart;
	Ring ring; // fine or coarse
	int degree = 0;
	std::map<Subset, RingElement> comps;

	LogForm() = default;
	LogForm(Chart ch, Ring rg, int deg) : chart(ch), ring(rg), degree(deg) {}

	static LogForm scalar(Chart ch, Ring rg, const RingElement &a)
	{
		LogForm f(ch, rg, 0);
		if (!a.is_zero())
			f.comps[0] = a;
		return f;
	}
	/// basis form of degree |I| with coefficient a
	static LogForm basis(Chart ch, Ring rg, Subset I, const RingElement &a)
	{
		LogForm f(ch, rg, subset_size(I));
		if (!a.is_zero())
			f.comps[I] = a;
		return f;
	}

	bool is_zero() const { return comps.empty(); }

	void add_term(Subset I, const RingElement &a)
	{
		if (a.is_zero())
			return;
		auto it = comps.find(I);
		if (it == comps.end())
			comps.emplace(I, a);
		else
		{
			it->second = it->second + a;
			if (it->second.is_zero())
				comps.erase(it);
		}
	}

	LogForm operator+(const LogForm &o) const
	{
		check_compatible(o);
		if (degree != o.degree)
			throw Error("degree mismatch in form sum");
		LogForm r = *this;
		for (auto &[I, a] : o.comps)
			r.add_term(I, a);
		return r;
	}
	LogForm operator-(const LogForm &o) const { return *this + o.scale(-1); }
	LogForm scale(int v) const
	{
		LogForm r(chart, ring, degree);
		for (auto &[I, a] : comps)
			r.add_term(I, a.scale(v));
		return r;
	}
	LogForm mul(const RingElement &x) const
	{
		LogForm r(chart, ring, degree);
		for (auto &[I, a] : comps)
			r.add_term(I, a * x);
		return r;
	}

	LogForm wedge(const LogForm &o) const
	{
		check_compatible(o);
		LogForm r(chart, ring, degree + o.degree);
		if (degree + o.degree > chart.n)
			return r;
		for (auto &[I, a] : comps)
			for (auto &[J, b] : o.comps)
			{
				if (I & J)
					continue;
				int sgn = merge_sign(I, J);
				r.add_term(I | J, (a * b).scale(sgn));
			}
		return r;
	}

	bool operator==(const LogForm &o) const
	{
		return chart == o.chart && ring == o.ring && degree == o.degree && comps == o.comps;
	}

	std::string str() const
	{
		if (comps.empty())
			return "0";
		std::string out;
		bool first = true;
		for (auto &[I, a] : comps)
		{
			if (!first)
				out += " + ";
			first = false;
			out += "(" + a.str() + ")";
			for (int i : subset_elems(I))
				out += chart.is_log(i) ? (" dlog t" + std::to_string(i + 1))
				                       : (" dt" + std::to_string(i + 1));
		}
		return out;
	}

  private:
	void check_compatible(const LogForm &o) const
	{
		if (!(chart == o.chart) || ring != o.ring)
			throw Error("chart mismatch between forms");
	}
};

/// Exterior differential.  Against dlog t_i the coefficient rule is t_i d/dt_i,
/// against dt_i it is d/dt_i.
inline LogForm exterior_d(const LogForm &xi)
{
	if (xi.degree >= xi.chart.n)
		throw Error("exterior_d on a top-degree form");
	LogForm r(xi.chart, xi.ring, xi.degree + 1);
	for (auto &[I, a] : xi.comps)
		for (int i = 0; i < xi.chart.n; ++i)
		{
			if (I & (Subset(1) << i))
				continue;
			RingElement da = xi.chart.is_log(i) ? a.tderiv(i) : a.deriv(i);
			if (da.is_zero())
				continue;
			int sgn = insert_sign(i, I);
			r.add_term(I | (Subset(1) << i), da.scale(sgn));
		}
	return r;
}

/// d of a ring element as a 1-form on the chart.
inline LogForm d_of(const Chart &ch, const RingElement &x)
{
	Ring rg = x.ring;
	LogForm r(ch, rg, 1);
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement da = ch.is_log(i) ? x.tderiv(i) : x.deriv(i);
		if (!da.is_zero())
			r.add_term(Subset(1) << i, da);
	}
	return r;
}

} // namespace cartierlab
