#pragma once

#include "cartierlab/fp.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace cartierlab {

using ExpVec = std::vector<uint8_t>;

/// F_p[t_1..t_n] cut at exponent `cap` in every variable.
struct Ring
{
	int p = 2;
	int n = 1;
	int cap = 2;

	bool operator==(const Ring &o) const { return p == o.p && n == o.n && cap == o.cap; }
	bool operator!=(const Ring &o) const { return !(*this == o); }

	long monomial_count() const
	{
		long c = 1;
		for (int i = 0; i < n; ++i)
			c *= cap;
		return c;
	}
	long mono_index(const ExpVec &e) const
	{
		long idx = 0;
		for (int i = 0; i < n; ++i)
			idx = idx * cap + e[i];
		return idx;
	}
	ExpVec mono_of_index(long idx) const
	{
		ExpVec e(n, 0);
		for (int i = n - 1; i >= 0; --i)
		{
			e[i] = (uint8_t)(idx % cap);
			idx /= cap;
		}
		return e;
	}
};

/// Ambient chart data.  The coordinate ring is cut at exponent N = p*M; its
/// Frobenius source is the coarse quotient cut at M.  Log coordinates carry
/// dlog t_i basis forms, the others dt_i.  Charts built from user input have
/// the log coordinates in front; products of charts may interleave them.
struct Chart
{
	int p = 3;
	int n = 1;
	int M = 1;
	std::vector<bool> log_flag; // size n
	int s = 0;                  // Kontsevich parameter, 0 = unset; g = t_1..t_s

	Chart() = default;
	Chart(int p_, int n_, int r_, int M_, int s_ = 0) : p(p_), n(n_), M(M_), s(s_)
	{
		if (n < 0 || r_ < 0 || r_ > n || M < 1)
			throw Error("invalid chart parameters");
		if (s < 0 || s > r_)
			throw Error("kontsevich parameter must satisfy 0 < s <= r");
		log_flag.assign(n, false);
		for (int i = 0; i < r_; ++i)
			log_flag[i] = true;
	}

	int r() const { return (int)std::count(log_flag.begin(), log_flag.end(), true); }
	bool is_log(int i) const { return log_flag[i]; } // 0-based
	int N() const { return p * M; }
	Ring fine() const { return Ring{p, n, p * M}; }
	Ring coarse() const { return Ring{p, n, M}; }

	bool operator==(const Chart &o) const
	{
		return p == o.p && n == o.n && M == o.M && log_flag == o.log_flag && s == o.s;
	}

	/// Product chart; coordinates of `a` first, then `b`.  The Kontsevich
	/// parameter does not survive products.
	static Chart product(const Chart &a, const Chart &b)
	{
		if (a.p != b.p)
			throw Error("chart product needs equal primes");
		if (a.M != b.M)
			throw Error("chart product needs equal truncation orders");
		Chart c;
		c.p = a.p;
		c.n = a.n + b.n;
		c.M = a.M;
		c.s = 0;
		c.log_flag = a.log_flag;
		c.log_flag.insert(c.log_flag.end(), b.log_flag.begin(), b.log_flag.end());
		return c;
	}
};

/// Sparse truncated polynomial.  Keys are exponent vectors in canonical
/// (lexicographic) order; no zero coefficients are stored.
class RingElement
{
  public:
	Ring ring;
	std::map<ExpVec, uint8_t> c;

	RingElement() = default;
	explicit RingElement(Ring rg) : ring(rg) {}

	static RingElement zero(Ring rg) { return RingElement(rg); }
	static RingElement constant(Ring rg, int v)
	{
		RingElement e(rg);
		v = fp_red(v, rg.p);
		if (v)
			e.c[ExpVec(rg.n, 0)] = (uint8_t)v;
		return e;
	}
	static RingElement one(Ring rg) { return constant(rg, 1); }
	static RingElement monomial(Ring rg, const ExpVec &e, int v = 1)
	{
		RingElement x(rg);
		v = fp_red(v, rg.p);
		for (int i = 0; i < rg.n; ++i)
			if (e[i] >= rg.cap)
				return x; // truncated away
		if (v)
			x.c[e] = (uint8_t)v;
		return x;
	}
	static RingElement variable(Ring rg, int i, int e = 1)
	{
		ExpVec v(rg.n, 0);
		v[i] = (uint8_t)e;
		return monomial(rg, v);
	}

	bool is_zero() const { return c.empty(); }
	int constant_term() const
	{
		auto it = c.find(ExpVec(ring.n, 0));
		return it == c.end() ? 0 : it->second;
	}
	bool is_unit() const { return constant_term() != 0; }
	bool is_nilpotent() const { return constant_term() == 0; }

	void add_term(const ExpVec &e, int v)
	{
		for (int i = 0; i < ring.n; ++i)
			if (e[i] >= ring.cap)
				return;
		int w = fp_red(v, ring.p);
		if (!w)
			return;
		auto it = c.find(e);
		if (it == c.end())
			c.emplace(e, (uint8_t)w);
		else
		{
			int s = (it->second + w) % ring.p;
			if (s)
				it->second = (uint8_t)s;
			else
				c.erase(it);
		}
	}

	RingElement operator+(const RingElement &o) const
	{
		check_same(o);
		RingElement r = *this;
		for (auto &[e, v] : o.c)
			r.add_term(e, v);
		return r;
	}
	RingElement operator-(const RingElement &o) const
	{
		check_same(o);
		RingElement r = *this;
		for (auto &[e, v] : o.c)
			r.add_term(e, ring.p - v);
		return r;
	}
	RingElement operator-() const
	{
		RingElement r(ring);
		for (auto &[e, v] : c)
			r.c[e] = (uint8_t)(ring.p - v);
		return r;
	}
	RingElement operator*(const RingElement &o) const
	{
		check_same(o);
		RingElement r(ring);
		for (auto &[e1, v1] : c)
			for (auto &[e2, v2] : o.c)
			{
				ExpVec e(ring.n);
				bool alive = true;
				for (int i = 0; i < ring.n; ++i)
				{
					int s = e1[i] + e2[i];
					if (s >= ring.cap)
					{
						alive = false;
						break;
					}
					e[i] = (uint8_t)s;
				}
				if (alive)
					r.add_term(e, v1 * v2);
			}
		return r;
	}
	RingElement scale(int v) const
	{
		v = fp_red(v, ring.p);
		RingElement r(ring);
		if (!v)
			return r;
		for (auto &[e, w] : c)
			r.c[e] = (uint8_t)(w * v % ring.p);
		return r;
	}
	bool operator==(const RingElement &o) const { return ring == o.ring && c == o.c; }

	RingElement pow(long k) const
	{
		RingElement r = one(ring), b = *this;
		while (k > 0)
		{
			if (k & 1)
				r = r * b;
			b = b * b;
			k >>= 1;
		}
		return r;
	}

	/// plain coefficient derivative d/dt_i
	RingElement deriv(int i) const
	{
		RingElement r(ring);
		for (auto &[e, v] : c)
		{
			if (e[i] == 0)
				continue;
			ExpVec f = e;
			f[i] -= 1;
			r.add_term(f, v * e[i]);
		}
		return r;
	}
	/// logarithmic derivative t_i d/dt_i
	RingElement tderiv(int i) const
	{
		RingElement r(ring);
		for (auto &[e, v] : c)
			r.add_term(e, v * e[i]);
		return r;
	}
	RingElement mul_var(int i, int k = 1) const
	{
		RingElement r(ring);
		for (auto &[e, v] : c)
		{
			if (e[i] + k >= ring.cap)
				continue;
			ExpVec f = e;
			f[i] = (uint8_t)(f[i] + k);
			r.add_term(f, v);
		}
		return r;
	}

	/// inverse of a unit; the nilpotent part has bounded order in the
	/// truncated ring so the geometric series terminates
	RingElement inv() const
	{
		int c0 = constant_term();
		if (!c0)
			throw Error("not a unit");
		int ic = fp_inv(c0, ring.p);
		RingElement x = (RingElement::constant(ring, c0) - *this).scale(ic); // nilpotent
		RingElement r = one(ring), pw = one(ring);
		while (true)
		{
			pw = pw * x;
			if (pw.is_zero())
				break;
			r = r + pw;
		}
		return r.scale(ic);
	}

	std::string str() const
	{
		if (c.empty())
			return "0";
		std::ostringstream os;
		bool first = true;
		for (auto &[e, v] : c)
		{
			if (!first)
				os << "+";
			first = false;
			bool has_var = std::any_of(e.begin(), e.end(), [](uint8_t x) { return x > 0; });
			if (v != 1 || !has_var)
				os << (int)v;
			for (int i = 0; i < ring.n; ++i)
				if (e[i])
				{
					os << "t" << (i + 1);
					if (e[i] > 1)
						os << "^" << (int)e[i];
				}
		}
		return os.str();
	}

  private:
	void check_same(const RingElement &o) const
	{
		if (ring != o.ring)
			throw Error("chart mismatch in ring arithmetic");
	}
};

/// Frobenius pull: coarse ring -> fine ring, t_i -> t_i^p on a chart.
inline RingElement frobenius(const Chart &ch, const RingElement &x)
{
	if (x.ring != ch.coarse())
		throw Error("frobenius expects a coarse ring element");
	RingElement r(ch.fine());
	for (auto &[e, v] : x.c)
	{
		ExpVec f(e.size());
		for (size_t i = 0; i < e.size(); ++i)
			f[i] = (uint8_t)(e[i] * ch.p);
		r.add_term(f, v); // p*e < p*M always holds
	}
	return r;
}

/// Quotient map fine -> coarse (kills monomials with an exponent >= M).
inline RingElement coarsen(const Chart &ch, const RingElement &x)
{
	if (x.ring != ch.fine())
		throw Error("coarsen expects a fine ring element");
	RingElement r(ch.coarse());
	for (auto &[e, v] : x.c)
		r.add_term(e, v);
	return r;
}

/// One part of the Frobenius-basis decomposition of a function.
struct FrobeniusPart
{
	ExpVec alpha;  // multi-index in {0..p-1}^n
	RingElement h; // coarse ring element with h^p t^alpha the part
};

/// Split f into its components along the basis {t^alpha : 0 <= alpha < p} of
/// the pushed-forward ring: f = sum_alpha h_alpha^p t^alpha.
inline std::vector<FrobeniusPart> decompose_function(const Chart &ch, const RingElement &f)
{
	if (f.ring != ch.fine())
		throw Error("decompose_function expects a fine ring element");
	std::map<ExpVec, RingElement> parts;
	for (auto &[e, v] : f.c)
	{
		ExpVec alpha(ch.n), q(ch.n);
		for (int i = 0; i < ch.n; ++i)
		{
			alpha[i] = (uint8_t)(e[i] % ch.p);
			q[i] = (uint8_t)(e[i] / ch.p);
		}
		auto it = parts.find(alpha);
		if (it == parts.end())
			it = parts.emplace(alpha, RingElement(ch.coarse())).first;
		// coefficients of F_p are fixed by x -> x^p, so h picks up v itself
		it->second.add_term(q, v);
	}
	std::vector<FrobeniusPart> out;
	for (auto &[alpha, h] : parts)
		if (!h.is_zero())
			out.push_back({alpha, h});
	return out;
}

/// Reassemble sum h^p t^alpha in the fine ring.
inline RingElement recompose_function(const Chart &ch, const std::vector<FrobeniusPart> &parts)
{
	RingElement f(ch.fine());
	for (auto &pt : parts)
	{
		RingElement hp = frobenius(ch, pt.h); // (h(t))^p = h(t^p) over F_p
		RingElement m = RingElement::monomial(ch.fine(), pt.alpha);
		f = f + hp * m;
	}
	return f;
}

} // namespace cartierlab
