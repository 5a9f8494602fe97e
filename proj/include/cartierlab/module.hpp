#pragma once

#include "cartierlab/form.hpp"

namespace cartierlab {

using RVec = std::vector<RingElement>;              // length m
using RMat = std::vector<std::vector<RingElement>>; // m x m, row major

inline RMat rmat_zero(Ring rg, int m)
{
	return RMat(m, std::vector<RingElement>(m, RingElement::zero(rg)));
}
inline RMat rmat_identity(Ring rg, int m)
{
	RMat a = rmat_zero(rg, m);
	for (int i = 0; i < m; ++i)
		a[i][i] = RingElement::one(rg);
	return a;
}
inline RMat rmat_add(const RMat &a, const RMat &b)
{
	RMat r = a;
	for (size_t i = 0; i < a.size(); ++i)
		for (size_t j = 0; j < a.size(); ++j)
			r[i][j] = a[i][j] + b[i][j];
	return r;
}
inline RMat rmat_sub(const RMat &a, const RMat &b)
{
	RMat r = a;
	for (size_t i = 0; i < a.size(); ++i)
		for (size_t j = 0; j < a.size(); ++j)
			r[i][j] = a[i][j] - b[i][j];
	return r;
}
inline RMat rmat_mul(const RMat &a, const RMat &b)
{
	size_t m = a.size();
	Ring rg = a[0][0].ring;
	RMat r = rmat_zero(rg, (int)m);
	for (size_t i = 0; i < m; ++i)
		for (size_t k = 0; k < m; ++k)
		{
			if (a[i][k].is_zero())
				continue;
			for (size_t j = 0; j < m; ++j)
				if (!b[k][j].is_zero())
					r[i][j] = r[i][j] + a[i][k] * b[k][j];
		}
	return r;
}
inline RMat rmat_scale(const RMat &a, const RingElement &x)
{
	RMat r = a;
	for (auto &row : r)
		for (auto &e : row)
			e = e * x;
	return r;
}
inline bool rmat_is_zero(const RMat &a)
{
	for (auto &row : a)
		for (auto &e : row)
			if (!e.is_zero())
				return false;
	return true;
}
inline RVec rmat_apply(const RMat &a, const RVec &v)
{
	size_t m = a.size();
	Ring rg = v[0].ring;
	RVec r(m, RingElement::zero(rg));
	for (size_t i = 0; i < m; ++i)
		for (size_t j = 0; j < m; ++j)
			if (!a[i][j].is_zero() && !v[j].is_zero())
				r[i] = r[i] + a[i][j] * v[j];
	return r;
}
inline RVec rvec_scale(const RVec &v, const RingElement &x)
{
	RVec r = v;
	for (auto &e : r)
		e = e * x;
	return r;
}
inline RMat rmat_frobenius(const Chart &ch, const RMat &a)
{
	RMat r(a.size(), std::vector<RingElement>(a.size(), RingElement::zero(ch.fine())));
	for (size_t i = 0; i < a.size(); ++i)
		for (size_t j = 0; j < a.size(); ++j)
			r[i][j] = frobenius(ch, a[i][j]);
	return r;
}
inline RMat rmat_coarsen(const Chart &ch, const RMat &a)
{
	RMat r(a.size(), std::vector<RingElement>(a.size(), RingElement::zero(ch.coarse())));
	for (size_t i = 0; i < a.size(); ++i)
		for (size_t j = 0; j < a.size(); ++j)
			r[i][j] = coarsen(ch, a[i][j]);
	return r;
}

/// nilpotent-part inverse for I + N with N a sum of commuting nilpotents
inline RMat rmat_unipotent_inverse(const RMat &a)
{
	size_t m = a.size();
	Ring rg = a[0][0].ring;
	RMat N = rmat_sub(a, rmat_identity(rg, (int)m));
	RMat r = rmat_identity(rg, (int)m);
	RMat pw = rmat_identity(rg, (int)m);
	int guard = 0;
	while (true)
	{
		pw = rmat_mul(pw, N);
		if (rmat_is_zero(pw))
			break;
		if (++guard > 512)
			throw Error("matrix is not unipotent");
		r = (guard % 2) ? rmat_sub(r, pw) : rmat_add(r, pw);
	}
	return r;
}

/// Free module of rank m over a truncated coordinate ring, viewed as an F_p
/// space with basis (component j, monomial).
struct ChartModule
{
	Ring ring;
	int m = 1;

	long mono_count() const { return ring.monomial_count(); }
	long fp_dim() const { return m * mono_count(); }
	long index(int j, const ExpVec &e) const { return j * mono_count() + ring.mono_index(e); }
	std::pair<int, ExpVec> label(long idx) const
	{
		return {(int)(idx / mono_count()), ring.mono_of_index(idx % mono_count())};
	}
	std::string label_str(long idx) const
	{
		auto [j, e] = label(idx);
		std::string out = "m" + std::to_string(j + 1);
		RingElement mono = RingElement::monomial(ring, e);
		if (!(mono == RingElement::one(ring)))
			out += "·" + mono.str();
		return out;
	}

	std::vector<uint8_t> to_fp(const RVec &v) const
	{
		std::vector<uint8_t> out(fp_dim(), 0);
		for (int j = 0; j < m; ++j)
			for (auto &[e, c] : v[j].c)
				out[index(j, e)] = c;
		return out;
	}
	RVec from_fp(const std::vector<uint8_t> &v) const
	{
		RVec out(m, RingElement::zero(ring));
		for (long i = 0; i < fp_dim(); ++i)
			if (v[i])
			{
				auto [j, e] = label(i);
				out[j].add_term(e, v[i]);
			}
		return out;
	}

	/// F_p matrix of an O-linear map given by a ring matrix
	FpMatrix linearize(const RMat &a) const
	{
		FpMatrix out(ring.p, (int)fp_dim(), (int)fp_dim());
		for (int j = 0; j < m; ++j)
			for (long mi = 0; mi < mono_count(); ++mi)
			{
				ExpVec e = ring.mono_of_index(mi);
				RingElement mono = RingElement::monomial(ring, e);
				for (int i = 0; i < m; ++i)
				{
					if (a[i][j].is_zero())
						continue;
					RingElement img = a[i][j] * mono;
					for (auto &[f, c] : img.c)
						out((int)index(i, f), (int)index(j, e)) = c;
				}
			}
		return out;
	}

	/// F_p matrix of coefficient-wise multiplication by x
	FpMatrix mul_op(const RingElement &x) const
	{
		FpMatrix out(ring.p, (int)fp_dim(), (int)fp_dim());
		for (int j = 0; j < m; ++j)
			for (long mi = 0; mi < mono_count(); ++mi)
			{
				ExpVec e = ring.mono_of_index(mi);
				RingElement img = x * RingElement::monomial(ring, e);
				for (auto &[f, c] : img.c)
					out((int)index(j, f), (int)index(j, e)) = c;
			}
		return out;
	}

	/// F_p matrix of the coefficient derivation in direction i (t_i d/dt_i on
	/// log coordinates, d/dt_i otherwise)
	FpMatrix deriv_op(int i, bool log_dir) const
	{
		FpMatrix out(ring.p, (int)fp_dim(), (int)fp_dim());
		for (int j = 0; j < m; ++j)
			for (long mi = 0; mi < mono_count(); ++mi)
			{
				ExpVec e = ring.mono_of_index(mi);
				RingElement mono = RingElement::monomial(ring, e);
				RingElement img = log_dir ? mono.tderiv(i) : mono.deriv(i);
				for (auto &[f, c] : img.c)
					out((int)index(j, f), (int)index(j, e)) = c;
			}
		return out;
	}
};

} // namespace cartierlab
