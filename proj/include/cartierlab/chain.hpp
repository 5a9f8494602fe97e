#pragma once

#include "cartierlab/fp.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <optional>

namespace cartierlab {

/// Finite F_p complex supported in degrees [lo, hi] with labeled bases.
/// Differentials raise degree; d[q-lo] : C^q -> C^{q+1}.
class ChainComplex
{
  public:
	int p = 2;
	int lo = 0, hi = 0;
	std::vector<int> dims;                       // size hi-lo+1
	std::vector<FpMatrix> d;                     // size hi-lo (may be empty)
	std::vector<std::vector<std::string>> label; // per degree, may be empty

	ChainComplex() = default;
	ChainComplex(int p_, int lo_, std::vector<int> dims_) : p(p_), lo(lo_), dims(std::move(dims_))
	{
		hi = lo + (int)dims.size() - 1;
		for (size_t i = 0; i + 1 < dims.size(); ++i)
			d.emplace_back(p, dims[i + 1], dims[i]);
		label.resize(dims.size());
	}

	int dim(int q) const { return (q < lo || q > hi) ? 0 : dims[q - lo]; }
	FpMatrix &diff(int q) { return d[q - lo]; }
	const FpMatrix &diff(int q) const { return d[q - lo]; }
	FpMatrix diff_or_zero(int q) const
	{
		if (q < lo || q >= hi)
			return FpMatrix(p, dim(q + 1), dim(q));
		return d[q - lo];
	}
	const std::string &label_of(int q, int i) const
	{
		static const std::string anon = "?";
		if (q < lo || q > hi || label[q - lo].empty())
			return anon;
		return label[q - lo][i];
	}

	void validate() const
	{
		for (int q = lo; q < hi; ++q)
		{
			if (diff(q).rows != dim(q + 1) || diff(q).cols != dim(q))
				throw Error("differential shape mismatch at degree " + std::to_string(q));
		}
		for (int q = lo; q + 1 < hi; ++q)
			if (!(diff(q + 1) * diff(q)).is_zero())
				throw Error("d∘d != 0 at degree " + std::to_string(q));
	}

	long total_dim() const
	{
		long t = 0;
		for (int x : dims)
			t += x;
		return t;
	}
};

struct HomologyRow
{
	int degree;
	int dim_ker;
	int dim_im_in; // rank of the incoming differential
	int dim_h;
};

inline std::vector<HomologyRow> homology_ranks(const ChainComplex &C)
{
	std::vector<HomologyRow> out;
	for (int q = C.lo; q <= C.hi; ++q)
	{
		int rk_out = (q < C.hi) ? rank(C.diff(q)) : 0;
		int rk_in = (q > C.lo) ? rank(C.diff(q - 1)) : 0;
		int ker = C.dim(q) - rk_out;
		out.push_back({q, ker, rk_in, ker - rk_in});
	}
	return out;
}

inline int homology_dim(const ChainComplex &C, int q)
{
	if (q < C.lo || q > C.hi)
		return 0;
	int rk_out = (q < C.hi) ? rank(C.diff(q)) : 0;
	int rk_in = (q > C.lo) ? rank(C.diff(q - 1)) : 0;
	return C.dim(q) - rk_out - rk_in;
}

inline bool is_acyclic(const ChainComplex &C)
{
	for (int q = C.lo; q <= C.hi; ++q)
		if (homology_dim(C, q) != 0)
			return false;
	return true;
}

/// Degree-k morphism between complexes; component at source degree q maps
/// C^q -> D^{q+k}.
struct ChainMap
{
	ChainComplex src, tgt;
	int shift = 0;
	std::vector<FpMatrix> mats; // indexed by source degree - src.lo

	ChainMap() = default;
	ChainMap(ChainComplex s, ChainComplex t, int k) : src(std::move(s)), tgt(std::move(t)), shift(k)
	{
		mats.reserve(src.dims.size());
		for (int q = src.lo; q <= src.hi; ++q)
			mats.emplace_back(src.p, tgt.dim(q + k), src.dim(q));
	}

	static ChainMap identity(const ChainComplex &C)
	{
		ChainMap f(C, C, 0);
		for (int q = C.lo; q <= C.hi; ++q)
			f.component(q) = FpMatrix::identity(C.p, C.dim(q));
		return f;
	}

	FpMatrix &component(int q) { return mats[q - src.lo]; }
	FpMatrix component_or_zero(int q) const
	{
		if (q < src.lo || q > src.hi)
			return FpMatrix(src.p, tgt.dim(q + shift), src.dim(q));
		return mats[q - src.lo];
	}

	ChainMap compose(const ChainMap &g) const // (*this) after g
	{
		ChainMap h(g.src, tgt, shift + g.shift);
		for (int q = g.src.lo; q <= g.src.hi; ++q)
			h.component(q) = component_or_zero(q + g.shift) * g.component_or_zero(q);
		return h;
	}
	ChainMap add(const ChainMap &g) const
	{
		ChainMap h(src, tgt, shift);
		for (int q = src.lo; q <= src.hi; ++q)
			h.component(q) = component_or_zero(q) + g.component_or_zero(q);
		return h;
	}
	ChainMap scale(int c) const
	{
		ChainMap h(src, tgt, shift);
		for (int q = src.lo; q <= src.hi; ++q)
			h.component(q) = component_or_zero(q).scale(c);
		return h;
	}
};

/// degree -1 homotopy data between two degree-k maps f and g
struct Homotopy
{
	ChainMap f, g;
	ChainMap h; // degree k-1
};

struct Verdict
{
	bool pass = false;
	std::string claim;
	int witness_degree = 0;
	std::string witness;

	static Verdict ok(std::string cl) { return {true, std::move(cl), 0, ""}; }
	static Verdict fail(std::string cl, int deg, std::string wit)
	{
		return {false, std::move(cl), deg, std::move(wit)};
	}
};

/// commutation defect d∘f - (-1)^k f∘d at source degree q
inline FpMatrix chain_defect(const ChainMap &f, int q)
{
	FpMatrix a = f.tgt.diff_or_zero(q + f.shift) * f.component_or_zero(q);
	FpMatrix b = f.component_or_zero(q + 1) * f.src.diff_or_zero(q);
	int sgn = (f.shift % 2 == 0) ? 1 : -1;
	return a - b.scale(sgn);
}

inline Verdict certify_chain_map(const ChainMap &f)
{
	for (int q = f.src.lo; q <= f.src.hi; ++q)
	{
		FpMatrix defect = chain_defect(f, q);
		if (!defect.is_zero())
		{
			for (int j = 0; j < defect.cols; ++j)
				for (int i = 0; i < defect.rows; ++i)
					if (defect(i, j))
						return Verdict::fail("chain_map", q, f.src.label_of(q, j));
		}
	}
	return Verdict::ok("chain_map");
}

inline ChainComplex mapping_cone(const ChainMap &f)
{
	if (f.shift != 0)
		throw Error("mapping cone needs a degree-0 map");
	const ChainComplex &C = f.src, &D = f.tgt;
	int lo = std::min(C.lo - 1, D.lo), hi = std::max(C.hi - 1, D.hi);
	std::vector<int> dims;
	for (int q = lo; q <= hi; ++q)
		dims.push_back(D.dim(q) + C.dim(q + 1));
	ChainComplex cone(C.p, lo, dims);
	for (int q = lo; q < hi; ++q)
	{
		FpMatrix &m = cone.diff(q);
		FpMatrix dD = D.diff_or_zero(q);
		FpMatrix dC = C.diff_or_zero(q + 1);
		FpMatrix fq = f.component_or_zero(q + 1);
		// rows: D^{q+1} then C^{q+2}; cols: D^q then C^{q+1}
		for (int i = 0; i < dD.rows; ++i)
			for (int j = 0; j < dD.cols; ++j)
				m(i, j) = dD(i, j);
		for (int i = 0; i < fq.rows; ++i)
			for (int j = 0; j < fq.cols; ++j)
				m(i, D.dim(q) + j) = fq(i, j);
		for (int i = 0; i < dC.rows; ++i)
			for (int j = 0; j < dC.cols; ++j)
				m(D.dim(q + 1) + i, D.dim(q) + j) = (uint8_t)((C.p - dC(i, j)) % C.p);
	}
	return cone;
}

/// representatives of H^q: columns extending im(d_{q-1}) inside ker(d_q)
struct HomologyBasis
{
	FpMatrix im;   // image basis (may have 0 cols)
	FpMatrix reps; // homology representatives
};

inline HomologyBasis homology_basis(const ChainComplex &C, int q)
{
	FpMatrix K = (q < C.hi) ? kernel_basis(C.diff(q)) : FpMatrix::identity(C.p, C.dim(q));
	FpMatrix B = (q > C.lo) ? image_basis(C.diff(q - 1)) : FpMatrix(C.p, C.dim(q), 0);
	Span s(C.p, C.dim(q));
	for (int j = 0; j < B.cols; ++j)
		s.insert(B.col(j));
	std::vector<std::vector<uint8_t>> reps;
	for (int j = 0; j < K.cols; ++j)
	{
		auto v = K.col(j);
		if (s.insert(v))
			reps.push_back(K.col(j));
	}
	FpMatrix R(C.p, C.dim(q), (int)reps.size());
	for (int j = 0; j < (int)reps.size(); ++j)
		R.set_col(j, reps[j]);
	return {B, R};
}

/// matrix of the induced map H^q(src) -> H^{q+shift}(tgt), in the
/// representative bases chosen by homology_basis
inline FpMatrix induced_on_homology(const ChainMap &f, int q)
{
	HomologyBasis hs = homology_basis(f.src, q);
	HomologyBasis ht = homology_basis(f.tgt, q + f.shift);
	FpMatrix fr = f.component_or_zero(q) * hs.reps;
	FpMatrix A = FpMatrix::hcat(ht.im, ht.reps);
	FpMatrix X = solve(A, fr); // throws when f(rep) is not a cycle mod boundaries
	FpMatrix out(f.src.p, ht.reps.cols, hs.reps.cols);
	for (int i = 0; i < ht.reps.cols; ++i)
		for (int j = 0; j < hs.reps.cols; ++j)
			out(i, j) = X(ht.im.cols + i, j);
	return out;
}

/// Quasi-isomorphism certificate.  Two oracles: acyclicity of the mapping
/// cone, and rank comparison of the induced maps on homology.  They must
/// agree or the routine throws.
inline Verdict certify_quasi_iso(const ChainMap &f)
{
	Verdict cm = certify_chain_map(f);
	if (!cm.pass)
		return Verdict::fail("quasi_iso (not a chain map)", cm.witness_degree, cm.witness);
	ChainComplex cone = mapping_cone(f);
	bool cone_ok = true;
	int bad_degree = 0;
	for (int q = cone.lo; q <= cone.hi; ++q)
		if (homology_dim(cone, q) != 0)
		{
			cone_ok = false;
			bad_degree = q;
			break;
		}
	bool induced_ok = true;
	int bad2 = 0;
	for (int q = std::min(f.src.lo, f.tgt.lo); q <= std::max(f.src.hi, f.tgt.hi); ++q)
	{
		int hs = homology_dim(f.src, q);
		int ht = homology_dim(f.tgt, q);
		if (hs != ht)
		{
			induced_ok = false;
			bad2 = q;
			break;
		}
		if (hs == 0)
			continue;
		FpMatrix m = induced_on_homology(f, q);
		if (rank(m) != hs)
		{
			induced_ok = false;
			bad2 = q;
			break;
		}
	}
	if (cone_ok != induced_ok)
		throw Error("quasi-iso oracles disagree at degree " +
		            std::to_string(cone_ok ? bad2 : bad_degree));
	if (!cone_ok)
		return Verdict::fail("quasi_iso", bad_degree, "cone homology nonzero");
	return Verdict::ok("quasi_iso");
}

inline Verdict certify_homotopic(const ChainMap &f, const ChainMap &g, const ChainMap &h)
{
	// d∘h + h∘d = f - g degreewise (f, g of equal degree k; h of degree k-1)
	for (int q = f.src.lo; q <= f.src.hi; ++q)
	{
		FpMatrix lhs = f.tgt.diff_or_zero(q + f.shift - 1) * h.component_or_zero(q) +
		               h.component_or_zero(q + 1) * f.src.diff_or_zero(q);
		FpMatrix rhs = f.component_or_zero(q) - g.component_or_zero(q);
		FpMatrix defect = lhs - rhs;
		if (!defect.is_zero())
		{
			for (int j = 0; j < defect.cols; ++j)
				for (int i = 0; i < defect.rows; ++i)
					if (defect(i, j))
						return Verdict::fail("homotopic", q, f.src.label_of(q, j));
		}
	}
	return Verdict::ok("homotopic");
}

inline Verdict certify_null_homotopic(const ChainMap &f, const ChainMap &h)
{
	ChainMap zero(f.src, f.tgt, f.shift);
	return certify_homotopic(f, zero, h);
}

enum class TruncMode
{
	Below,
	TwoSided
};

/// tau_{<b}: keep degrees < b, replacing degree b-1 by ker(d).
/// Returns the truncated complex and the inclusion into C.
struct Truncation
{
	ChainComplex cx;
	ChainMap incl; // cx -> C, degree 0
};

inline Truncation truncate_below(const ChainComplex &C, int b)
{
	if (b > C.hi)
	{
		Truncation t{C, ChainMap::identity(C)};
		return t;
	}
	int hi = b - 1;
	if (hi < C.lo)
	{
		ChainComplex empty(C.p, C.lo, {0});
		ChainMap inc(empty, C, 0);
		return {empty, inc};
	}
	FpMatrix K = kernel_basis(C.diff(hi));
	std::vector<int> dims;
	for (int q = C.lo; q < hi; ++q)
		dims.push_back(C.dim(q));
	dims.push_back(K.cols);
	ChainComplex T(C.p, C.lo, dims);
	for (int q = C.lo; q < hi; ++q)
	{
		if (q < hi - 1)
			T.diff(q) = C.diff(q);
		else
			T.diff(q) = solve(K, C.diff(q)); // d lands in ker; coordinates against K
		T.label[q - C.lo] = C.label[q - C.lo];
	}
	for (int j = 0; j < K.cols; ++j)
		T.label[hi - C.lo].push_back("ker" + std::to_string(j + 1));
	T.validate();
	ChainMap inc(T, C, 0);
	for (int q = C.lo; q < hi; ++q)
		inc.component(q) = FpMatrix::identity(C.p, C.dim(q));
	inc.component(hi) = K;
	return {T, inc};
}

/// tau_{[a,b]}: quotient by im(d) at the bottom, kernel at the top.
inline ChainComplex truncate_two_sided(const ChainComplex &C, int a, int b)
{
	if (a > b)
		throw Error("empty truncation window");
	Truncation below = truncate_below(C, b + 1);
	const ChainComplex &T = below.cx;
	if (a <= T.lo)
	{
		ChainComplex R = T;
		return R;
	}
	if (a > T.hi)
		return ChainComplex(C.p, a, {0});
	// quotient T^a by the image of d_{a-1}
	FpMatrix B = image_basis(T.diff_or_zero(a - 1));
	Span s(C.p, T.dim(a));
	for (int j = 0; j < B.cols; ++j)
		s.insert(B.col(j));
	std::vector<int> free_cols; // standard vectors completing the image
	for (int i = 0; i < T.dim(a); ++i)
	{
		std::vector<uint8_t> e(T.dim(a), 0);
		e[i] = 1;
		if (s.insert(e))
			free_cols.push_back(i);
	}
	FpMatrix reps(C.p, T.dim(a), (int)free_cols.size());
	for (size_t j = 0; j < free_cols.size(); ++j)
		reps(free_cols[j], (int)j) = 1;
	std::vector<int> dims;
	dims.push_back(reps.cols);
	for (int q = a + 1; q <= T.hi; ++q)
		dims.push_back(T.dim(q));
	ChainComplex R(C.p, a, dims);
	if (a < T.hi)
	{
		R.diff(a) = T.diff(a) * reps;
		for (int q = a + 1; q < T.hi; ++q)
			R.diff(q) = T.diff(q);
	}
	R.validate();
	return R;
}

inline ChainComplex truncate(const ChainComplex &C, TruncMode mode, int a, int b = 0)
{
	if (mode == TruncMode::Below)
		return truncate_below(C, a).cx;
	return truncate_two_sided(C, a, b);
}

/// restrict a degree-0 chain map to tau_{<b} truncations of both sides
inline ChainMap restrict_below(const ChainMap &f, int b)
{
	Truncation ts = truncate_below(f.src, b);
	Truncation tt = truncate_below(f.tgt, b);
	ChainMap g(ts.cx, tt.cx, 0);
	for (int q = ts.cx.lo; q <= ts.cx.hi; ++q)
	{
		FpMatrix fi = f.component_or_zero(q) * ts.incl.component_or_zero(q);
		g.component(q) = solve(tt.incl.component_or_zero(q), fi);
	}
	return g;
}

/// Koszul complex of commuting operators on an F_p space of dimension m.
inline ChainComplex koszul(int p, int m, const std::vector<FpMatrix> &ops,
                           const std::vector<std::string> &base_labels = {})
{
	int n = (int)ops.size();
	for (int i = 0; i < n; ++i)
		for (int j = i + 1; j < n; ++j)
			if (!(ops[i] * ops[j] - ops[j] * ops[i]).is_zero())
				throw Error("koszul operators must commute");
	std::vector<std::vector<uint32_t>> subs(n + 1);
	for (uint32_t I = 0; I < (1u << n); ++I)
		subs[std::popcount(I)].push_back(I);
	std::vector<int> dims;
	for (int q = 0; q <= n; ++q)
		dims.push_back(m * (int)subs[q].size());
	ChainComplex C(p, 0, dims);
	auto index_of = [&](int q, uint32_t I) {
		auto &v = subs[q];
		return (int)(std::find(v.begin(), v.end(), I) - v.begin());
	};
	for (int q = 0; q <= n; ++q)
	{
		auto &lab = C.label[q];
		for (uint32_t I : subs[q])
			for (int j = 0; j < m; ++j)
			{
				std::string base = base_labels.empty() ? ("m" + std::to_string(j + 1)) : base_labels[j];
				std::string e;
				for (int i = 0; i < n; ++i)
					if (I & (1u << i))
						e += "e" + std::to_string(i + 1);
				lab.push_back(base + (e.empty() ? "" : ("⊗" + e)));
			}
	}
	for (int q = 0; q < n; ++q)
	{
		FpMatrix &D = C.diff(q);
		for (size_t bi = 0; bi < subs[q].size(); ++bi)
		{
			uint32_t I = subs[q][bi];
			for (int i = 0; i < n; ++i)
			{
				if (I & (1u << i))
					continue;
				int sgn = (std::popcount(I & ((1u << i) - 1)) % 2) ? p - 1 : 1;
				int ti = index_of(q + 1, I | (1u << i));
				for (int col = 0; col < m; ++col)
					for (int row = 0; row < m; ++row)
					{
						int v = ops[i](row, col) * sgn % p;
						if (v)
							D((size_t)ti * m + row, bi * m + col) =
							    (uint8_t)((D((size_t)ti * m + row, bi * m + col) + v) % p);
					}
			}
		}
	}
	C.validate();
	return C;
}

} // namespace cartierlab
