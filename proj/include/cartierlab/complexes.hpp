#pragma once

#include "cartierlab/chain.hpp"
#include "cartierlab/higgs.hpp"

namespace cartierlab {

inline std::vector<std::vector<Subset>> subsets_by_size(int n)
{
	std::vector<std::vector<Subset>> out(n + 1);
	for (Subset I = 0; I < (Subset(1) << n); ++I)
		out[subset_size(I)].push_back(I);
	return out;
}

/// Complex E ⊗ Ω^• with differential x⊗ω_I -> sum_i op_i(x)⊗ω_i∧ω_I.
/// The operators act on the F_p space of the coefficient module.
struct ComplexModel
{
	Chart chart;
	ChartModule mod;
	std::vector<FpMatrix> op;
	std::vector<std::vector<Subset>> subsets;
	ChainComplex cx;

	int subset_pos(int q, Subset I) const
	{
		auto &v = subsets[q];
		return (int)(std::find(v.begin(), v.end(), I) - v.begin());
	}
	long index(int q, Subset I, long mi) const
	{
		return (long)subset_pos(q, I) * mod.fp_dim() + mi;
	}
	/// pack a module-space vector sitting at form subset I into degree-q coords
	std::vector<uint8_t> place(int q, Subset I, const std::vector<uint8_t> &mv) const
	{
		std::vector<uint8_t> out(cx.dim(q), 0);
		long off = (long)subset_pos(q, I) * mod.fp_dim();
		for (long i = 0; i < mod.fp_dim(); ++i)
			out[off + i] = mv[i];
		return out;
	}
	/// pack a module-valued form (coefficients per subset) into degree coords
	std::vector<uint8_t> place_form(int q, const std::map<Subset, RVec> &f) const
	{
		std::vector<uint8_t> out(cx.dim(q), 0);
		for (auto &[I, v] : f)
		{
			if (subset_size(I) != q)
				throw Error("degree mismatch in place_form");
			auto mv = mod.to_fp(v);
			long off = (long)subset_pos(q, I) * mod.fp_dim();
			for (long i = 0; i < mod.fp_dim(); ++i)
				out[off + i] = (uint8_t)((out[off + i] + mv[i]) % chart.p);
		}
		return out;
	}
};

inline ComplexModel build_complex_model(const Chart &chart, const ChartModule &mod,
                                        std::vector<FpMatrix> ops)
{
	ComplexModel M;
	M.chart = chart;
	M.mod = mod;
	M.op = std::move(ops);
	M.subsets = subsets_by_size(chart.n);
	long md = mod.fp_dim();
	std::vector<int> dims;
	for (int q = 0; q <= chart.n; ++q)
		dims.push_back((int)(md * M.subsets[q].size()));
	M.cx = ChainComplex(chart.p, 0, dims);
	for (int q = 0; q <= chart.n; ++q)
	{
		auto &lab = M.cx.label[q];
		lab.reserve(M.cx.dim(q));
		for (Subset I : M.subsets[q])
			for (long mi = 0; mi < md; ++mi)
				lab.push_back(mod.label_str(mi) + "⊗ω" + subset_str(I));
	}
	for (int q = 0; q < chart.n; ++q)
	{
		FpMatrix &D = M.cx.diff(q);
		for (size_t bi = 0; bi < M.subsets[q].size(); ++bi)
		{
			Subset I = M.subsets[q][bi];
			for (int i = 0; i < chart.n; ++i)
			{
				if (I & (Subset(1) << i))
					continue;
				int sgn = insert_sign(i, I);
				int ti = M.subset_pos(q + 1, I | (Subset(1) << i));
				const FpMatrix &A = M.op[i];
				for (int col = 0; col < A.cols; ++col)
					for (int row = 0; row < A.rows; ++row)
					{
						int v = A(row, col);
						if (!v)
							continue;
						v = (sgn > 0) ? v : (chart.p - v);
						uint8_t &slot = D((size_t)ti * md + row, bi * md + col);
						slot = (uint8_t)((slot + v) % chart.p);
					}
			}
		}
	}
	M.cx.validate(); // curvature vanishes
	return M;
}

/// Higgs complex of a (possibly deformed) field on the coarse module.
inline ComplexModel higgs_complex_model(const HiggsModule &E)
{
	ChartModule mod{E.chart.coarse(), E.m};
	std::vector<FpMatrix> ops;
	for (auto &t : E.theta)
		ops.push_back(mod.linearize(t));
	return build_complex_model(E.chart, mod, std::move(ops));
}

/// lambda-complex of a connection-type family on the fine module
inline ComplexModel lambda_complex_model(const LambdaConnection &H)
{
	ChartModule mod{H.chart.fine(), H.m};
	std::vector<FpMatrix> ops;
	for (int i = 0; i < H.chart.n; ++i)
	{
		FpMatrix A = mod.linearize(H.B[i]);
		if (H.lambda % H.chart.p != 0)
			A = A + mod.deriv_op(i, H.chart.is_log(i)).scale(H.lambda);
		ops.push_back(A);
	}
	return build_complex_model(H.chart, mod, std::move(ops));
}

// ---------------------------------------------------------------------------
// distinguished subcomplexes

enum class SelectorKind
{
	Full,
	Weight,       // weight filtration W_i
	Intersection, // intersection subcomplex
	Kontsevich    // adapted to g = t_1..t_s
};

inline std::string selector_name(SelectorKind k, int widx = 0)
{
	switch (k)
	{
	case SelectorKind::Full:
		return "full";
	case SelectorKind::Weight:
		return "weight(" + std::to_string(widx) + ")";
	case SelectorKind::Intersection:
		return "intersection";
	default:
		return "kontsevich";
	}
}

/// A subcomplex presented by explicit per-degree bases in ambient coordinates.
struct Subcomplex
{
	ChainComplex cx;
	std::vector<FpMatrix> basis; // per degree: ambient_dim x sub_dim

	/// coordinates of ambient vectors (columns of V) against the basis
	FpMatrix coords(int q, const FpMatrix &V) const { return solve(basis[q], V); }
	bool contains(int q, const std::vector<uint8_t> &v) const
	{
		Span s(cx.p, basis[q].rows);
		for (int j = 0; j < basis[q].cols; ++j)
			s.insert(basis[q].col(j));
		return s.contains(v);
	}
};

inline Subcomplex build_subcomplex(const ComplexModel &M, std::vector<FpMatrix> bases,
                                   std::vector<std::vector<std::string>> labels = {})
{
	int n = M.chart.n;
	std::vector<int> dims;
	for (int q = 0; q <= n; ++q)
		dims.push_back(bases[q].cols);
	ChainComplex C(M.chart.p, 0, dims);
	for (int q = 0; q < n; ++q)
		C.diff(q) = solve(bases[q + 1], M.cx.diff(q) * bases[q]); // throws unless d-closed
	if (!labels.empty())
		C.label = labels;
	C.validate();
	return Subcomplex{std::move(C), std::move(bases)};
}

/// saturate seed vectors into an O-submodule span (closure under all t_i)
inline Span module_span(const ChartModule &mod, std::vector<std::vector<uint8_t>> seeds)
{
	Span s(mod.ring.p, (int)mod.fp_dim());
	std::vector<FpMatrix> tmul;
	for (int i = 0; i < mod.ring.n; ++i)
		tmul.push_back(mod.mul_op(RingElement::variable(mod.ring, i)));
	std::vector<std::vector<uint8_t>> work = std::move(seeds);
	while (!work.empty())
	{
		auto v = std::move(work.back());
		work.pop_back();
		if (!s.insert(v))
			continue;
		for (auto &T : tmul)
			work.push_back(T.apply(v));
	}
	return s;
}

/// weight-filtration membership of a monomial basis element t^e ω_I: the
/// number of log members of I with zero exponent stays <= i
inline bool weight_member(const Chart &ch, const ExpVec &e, Subset I, int widx)
{
	int zeros = 0;
	for (int l : subset_elems(I))
		if (ch.is_log(l) && e[l] == 0)
			++zeros;
	return zeros <= widx;
}

/// Per-degree bases of the selector subcomplex inside a complex model.  For
/// Weight/Intersection the field operators of the model itself are used in
/// the generator formulas.
inline Subcomplex selector_subcomplex(const ComplexModel &M, SelectorKind kind, int widx = 0)
{
	const Chart &ch = M.chart;
	int n = ch.n, p = ch.p;
	long md = M.mod.fp_dim();
	std::vector<FpMatrix> bases;
	std::vector<std::vector<std::string>> labels;

	if (kind == SelectorKind::Full)
	{
		for (int q = 0; q <= n; ++q)
			bases.push_back(FpMatrix::identity(p, M.cx.dim(q)));
		return build_subcomplex(M, std::move(bases), M.cx.label);
	}

	if (kind == SelectorKind::Weight)
	{
		for (int q = 0; q <= n; ++q)
		{
			std::vector<long> cols;
			std::vector<std::string> lab;
			for (size_t bi = 0; bi < M.subsets[q].size(); ++bi)
			{
				Subset I = M.subsets[q][bi];
				for (long mi = 0; mi < md; ++mi)
				{
					auto [j, e] = M.mod.label(mi);
					if (weight_member(ch, e, I, widx))
					{
						cols.push_back((long)bi * md + mi);
						lab.push_back(M.cx.label[q][bi * md + mi]);
					}
				}
			}
			FpMatrix B(p, M.cx.dim(q), (int)cols.size());
			for (size_t j = 0; j < cols.size(); ++j)
				B((int)cols[j], (int)j) = 1;
			bases.push_back(std::move(B));
			labels.push_back(std::move(lab));
		}
		return build_subcomplex(M, std::move(bases), std::move(labels));
	}

	if (kind == SelectorKind::Intersection)
	{
		// per log-subset coefficient span: sum over J of t_J * (product of
		// the model operators over the complement) applied to the module
		std::map<Subset, Span> coeff_span;
		auto span_for = [&](Subset Ilog) -> const Span & {
			auto it = coeff_span.find(Ilog);
			if (it != coeff_span.end())
				return it->second;
			std::vector<std::vector<uint8_t>> seeds;
			auto elems = subset_elems(Ilog);
			int k = (int)elems.size();
			for (Subset Jbits = 0; Jbits < (Subset(1) << k); ++Jbits)
			{
				FpMatrix A = FpMatrix::identity(p, (int)md);
				for (int t = 0; t < k; ++t)
				{
					int l = elems[t];
					if (Jbits & (Subset(1) << t))
						A = M.mod.mul_op(RingElement::variable(M.mod.ring, l)) * A;
					else
						A = M.op[l] * A;
				}
				for (long c = 0; c < md; ++c)
				{
					auto v = A.col((int)c);
					bool nz = false;
					for (auto x : v)
						if (x)
						{
							nz = true;
							break;
						}
					if (nz)
						seeds.push_back(std::move(v));
				}
			}
			Span s = module_span(M.mod, std::move(seeds));
			return coeff_span.emplace(Ilog, std::move(s)).first->second;
		};
		for (int q = 0; q <= n; ++q)
		{
			std::vector<std::vector<uint8_t>> cols;
			std::vector<std::string> lab;
			for (Subset I : M.subsets[q])
			{
				Subset Ilog = 0;
				for (int l : subset_elems(I))
					if (ch.is_log(l))
						Ilog |= (Subset(1) << l);
				const Span &s = span_for(Ilog);
				for (int j = 0; j < s.rank(); ++j)
				{
					std::vector<uint8_t> mv = s.rows[j];
					std::vector<uint8_t> full(M.cx.dim(q), 0);
					long off = (long)M.subset_pos(q, I) * md;
					for (long i = 0; i < md; ++i)
						full[off + i] = mv[i];
					cols.push_back(std::move(full));
					lab.push_back("int[" + std::to_string(j + 1) + "]⊗ω" + subset_str(I));
				}
			}
			FpMatrix B(p, M.cx.dim(q), (int)cols.size());
			for (size_t j = 0; j < cols.size(); ++j)
				B.set_col((int)j, cols[j]);
			bases.push_back(std::move(B));
			labels.push_back(std::move(lab));
		}
		return build_subcomplex(M, std::move(bases), std::move(labels));
	}

	// Kontsevich: basis families dlog g ∧ ω_I (I avoiding coordinate 1) and
	// g·ω_J, with coefficients running over the module monomials
	if (ch.s < 1)
		throw Error("kontsevich selector needs the chart parameter s");
	RingElement g = RingElement::one(M.mod.ring);
	for (int i = 0; i < ch.s; ++i)
		g = g * RingElement::variable(M.mod.ring, i);
	FpMatrix gmul = M.mod.mul_op(g);
	for (int q = 0; q <= n; ++q)
	{
		std::vector<std::vector<uint8_t>> cols;
		std::vector<std::string> lab;
		if (q >= 1)
		{
			for (Subset I : M.subsets[q - 1])
			{
				if (I & 1)
					continue; // avoid coordinate 1
				for (long mi = 0; mi < md; ++mi)
				{
					std::vector<uint8_t> full(M.cx.dim(q), 0);
					bool nz = false;
					for (int i = 0; i < ch.s; ++i)
					{
						if (I & (Subset(1) << i))
							continue;
						int sgn = insert_sign(i, I);
						long off = (long)M.subset_pos(q, I | (Subset(1) << i)) * md;
						full[off + mi] = (uint8_t)((sgn > 0) ? 1 : p - 1);
						nz = true;
					}
					if (nz)
					{
						cols.push_back(std::move(full));
						lab.push_back(M.mod.label_str(mi) + "·dlog g∧ω" + subset_str(I));
					}
				}
			}
		}
		for (Subset J : M.subsets[q])
		{
			if (J & 1)
				continue;
			for (long mi = 0; mi < md; ++mi)
			{
				auto gv = gmul.col((int)mi);
				bool nz = false;
				for (auto x : gv)
					if (x)
					{
						nz = true;
						break;
					}
				if (!nz)
					continue;
				std::vector<uint8_t> full(M.cx.dim(q), 0);
				long off = (long)M.subset_pos(q, J) * md;
				for (long i = 0; i < md; ++i)
					full[off + i] = gv[i];
				cols.push_back(std::move(full));
				lab.push_back("g·" + M.mod.label_str(mi) + "⊗ω" + subset_str(J));
			}
		}
		FpMatrix B(p, M.cx.dim(q), (int)cols.size());
		for (size_t j = 0; j < cols.size(); ++j)
			B.set_col((int)j, cols[j]);
		bases.push_back(std::move(B));
		labels.push_back(std::move(lab));
	}
	return build_subcomplex(M, std::move(bases), std::move(labels));
}

/// Spanning generators of a selector (module element ⊗ form), used by the
/// property checks; the subcomplex is their O-span.
struct SubGen
{
	std::string label;
	int degree;
	std::vector<uint8_t> vec; // ambient degree coordinates
};

inline std::vector<SubGen> subcomplex_generators(const ComplexModel &M, SelectorKind kind, int widx = 0)
{
	const Chart &ch = M.chart;
	int n = ch.n;
	long md = M.mod.fp_dim();
	std::vector<SubGen> out;
	auto module_basis_vec = [&](int j) {
		RVec v(M.mod.m, RingElement::zero(M.mod.ring));
		v[j] = RingElement::one(M.mod.ring);
		return v;
	};
	if (kind == SelectorKind::Weight)
	{
		for (int q = 0; q <= n; ++q)
			for (Subset K : M.subsets[q])
			{
				std::vector<int> klog;
				for (int l : subset_elems(K))
					if (ch.is_log(l))
						klog.push_back(l);
				int need = std::max(0, (int)klog.size() - widx);
				// all minimal S of size `need`
				std::vector<int> pick(klog.size(), 0);
				std::function<void(int, int, Subset)> rec = [&](int start, int depth, Subset S) {
					if (depth == need)
					{
						RingElement tS = RingElement::one(M.mod.ring);
						for (int l : subset_elems(S))
							tS = tS * RingElement::variable(M.mod.ring, l);
						for (int j = 0; j < M.mod.m; ++j)
						{
							RVec v = module_basis_vec(j);
							v[j] = tS;
							out.push_back({"m" + std::to_string(j + 1) + "·t" + subset_str(S) + "⊗ω" + subset_str(K),
							               q, M.place(q, K, M.mod.to_fp(v))});
						}
						return;
					}
					for (int t = start; t < (int)klog.size(); ++t)
						rec(t + 1, depth + 1, S | (Subset(1) << klog[t]));
				};
				rec(0, 0, 0);
			}
		return out;
	}
	if (kind == SelectorKind::Intersection)
	{
		for (int q = 0; q <= n; ++q)
			for (Subset I : M.subsets[q])
			{
				std::vector<int> ilog;
				for (int l : subset_elems(I))
					if (ch.is_log(l))
						ilog.push_back(l);
				int k = (int)ilog.size();
				for (Subset Jbits = 0; Jbits < (Subset(1) << k); ++Jbits)
				{
					FpMatrix A = FpMatrix::identity(ch.p, (int)md);
					std::string nm;
					for (int t = 0; t < k; ++t)
					{
						int l = ilog[t];
						if (Jbits & (Subset(1) << t))
						{
							A = M.mod.mul_op(RingElement::variable(M.mod.ring, l)) * A;
							nm += "t" + std::to_string(l + 1);
						}
						else
						{
							A = M.op[l] * A;
							nm += "∇" + std::to_string(l + 1);
						}
					}
					// the connection-side operators are not O-linear, so the
					// spanning set runs over every module monomial
					for (long c = 0; c < md; ++c)
					{
						auto mv = A.col((int)c);
						bool nz = false;
						for (auto x : mv)
							if (x)
							{
								nz = true;
								break;
							}
						if (!nz)
							continue;
						out.push_back({nm + "(" + M.mod.label_str(c) + ")⊗ω" + subset_str(I), q,
						               M.place(q, I, mv)});
					}
				}
			}
		return out;
	}
	if (kind == SelectorKind::Kontsevich)
	{
		if (ch.s < 1)
			throw Error("kontsevich selector needs the chart parameter s");
		RingElement g = RingElement::one(M.mod.ring);
		for (int i = 0; i < ch.s; ++i)
			g = g * RingElement::variable(M.mod.ring, i);
		for (int q = 0; q <= n; ++q)
		{
			if (q >= 1)
				for (Subset I : M.subsets[q - 1])
				{
					if (I & 1)
						continue;
					for (int j = 0; j < M.mod.m; ++j)
					{
						std::map<Subset, RVec> f;
						for (int i = 0; i < ch.s; ++i)
						{
							if (I & (Subset(1) << i))
								continue;
							RVec v(M.mod.m, RingElement::zero(M.mod.ring));
							v[j] = RingElement::constant(M.mod.ring, insert_sign(i, I));
							f[I | (Subset(1) << i)] = v;
						}
						if (!f.empty())
							out.push_back({"m" + std::to_string(j + 1) + "·dlog g∧ω" + subset_str(I), q,
							               M.place_form(q, f)});
					}
				}
			for (Subset J : M.subsets[q]) // J over all subsets here; spanning, not a basis
				for (int j = 0; j < M.mod.m; ++j)
				{
					RVec v(M.mod.m, RingElement::zero(M.mod.ring));
					v[j] = g;
					auto mv = M.mod.to_fp(v);
					bool nz = false;
					for (auto x : mv)
						if (x)
						{
							nz = true;
							break;
						}
					if (nz)
						out.push_back({"g·m" + std::to_string(j + 1) + "⊗ω" + subset_str(J), q,
						               M.place(q, J, mv)});
				}
		}
		return out;
	}
	// Full: plain module basis elements
	for (int q = 0; q <= n; ++q)
		for (Subset I : M.subsets[q])
			for (int j = 0; j < M.mod.m; ++j)
				out.push_back({"m" + std::to_string(j + 1) + "⊗ω" + subset_str(I), q,
				               M.place(q, I, M.mod.to_fp(module_basis_vec(j)))});
	return out;
}

} // namespace cartierlab
