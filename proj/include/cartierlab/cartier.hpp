#pragma once

#include "cartierlab/complexes.hpp"

namespace cartierlab {

/// Frobenius lifting presented by its mod-p shadow: slot i holds w_i for a
/// log coordinate (lift t^p(1+pw)) and g_i otherwise (lift t^p + pg).
struct LiftingDatum
{
	Chart chart;
	std::vector<RingElement> wg; // size n, fine ring

	LiftingDatum() = default;
	LiftingDatum(Chart ch, std::vector<RingElement> data) : chart(ch), wg(std::move(data))
	{
		if ((int)wg.size() != chart.n)
			throw Error("lifting shadow needs one entry per coordinate");
		for (auto &x : wg)
			if (x.ring != chart.fine())
				throw Error("lifting shadow entries must live in the fine ring");
	}

	static LiftingDatum standard(const Chart &ch)
	{
		return LiftingDatum(ch, std::vector<RingElement>(ch.n, RingElement::zero(ch.fine())));
	}

	bool is_standard() const
	{
		for (auto &x : wg)
			if (!x.is_zero())
				return false;
		return true;
	}

	/// zeta(F^* omega_i) as a 1-form on the chart
	LogForm zeta(int i) const
	{
		LogForm z(chart, chart.fine(), 1);
		if (chart.is_log(i))
			z.add_term(Subset(1) << i, RingElement::one(chart.fine()));
		else
			z.add_term(Subset(1) << i,
			           RingElement::variable(chart.fine(), i, chart.p - 1));
		return z + d_of(chart, wg[i]);
	}
};

/// h_{ab}(F^* omega_i) for a pair of liftings
inline RingElement h_pair(const LiftingDatum &a, const LiftingDatum &b, int i)
{
	return b.wg[i] - a.wg[i];
}

struct LiftingFamily
{
	Chart chart;
	std::vector<LiftingDatum> members;

	const LiftingDatum &operator[](size_t i) const { return members[i]; }
	size_t size() const { return members.size(); }
};

/// the canonical connection plus the zeta-twisted pullback of a field; no
/// nilpotence requirement (deformed fields are fed through here too)
inline LambdaConnection cartier_connection(const HiggsModule &E, const LiftingDatum &F)
{
	LambdaConnection H;
	H.chart = E.chart;
	H.lambda = 1;
	H.m = E.m;
	H.B.assign(E.chart.n, rmat_zero(E.chart.fine(), E.m));
	for (int l = 0; l < E.chart.n; ++l)
	{
		if (rmat_is_zero(E.theta[l]))
			continue;
		RMat pulled = rmat_frobenius(E.chart, E.theta[l]);
		LogForm z = F.zeta(l);
		for (auto &[I, c] : z.comps)
		{
			int i = subset_elems(I)[0];
			H.B[i] = rmat_add(H.B[i], rmat_scale(pulled, c));
		}
	}
	return H;
}

/// local inverse Cartier transform of a nilpotent module
inline LambdaConnection inverse_cartier_local(const HiggsModule &E, const LiftingDatum &F)
{
	int lvl = nilpotency_level(E);
	if (lvl < 0 || lvl > E.chart.p - 1)
		throw Error("inverse Cartier needs nilpotency level <= p-1");
	return cartier_connection(E, F);
}

/// exp((id ⊗ h_{ab}) F^* theta) as a fine-ring matrix
inline RMat transition_iso(const HiggsModule &E, const LiftingDatum &a, const LiftingDatum &b)
{
	int lvl = nilpotency_level(E);
	if (lvl < 0 || lvl > E.chart.p - 1)
		throw Error("transition isomorphism needs nilpotency level <= p-1");
	Ring fine = E.chart.fine();
	RMat X = rmat_zero(fine, E.m);
	for (int l = 0; l < E.chart.n; ++l)
		X = rmat_add(X, rmat_scale(rmat_frobenius(E.chart, E.theta[l]), h_pair(a, b, l)));
	RMat G = rmat_identity(fine, E.m);
	RMat pw = rmat_identity(fine, E.m);
	long fact = 1;
	for (int k = 1;; ++k)
	{
		pw = rmat_mul(pw, X);
		if (rmat_is_zero(pw))
			break;
		if (k >= E.chart.p)
			throw Error("transition exponential does not terminate before p");
		fact *= k;
		G = rmat_add(G, rmat_scale(pw, RingElement::constant(fine, fp_inv(fp_red(fact, E.chart.p), E.chart.p))));
	}
	return G;
}

/// exact intertwining check D_i(G) + B^a_i G = G B^b_i for all directions
inline bool certify_transition(const Chart &ch, const RMat &G, const LambdaConnection &Ha,
                               const LambdaConnection &Hb, std::string *witness = nullptr)
{
	int m = (int)G.size();
	for (int i = 0; i < ch.n; ++i)
	{
		RMat dG = G;
		for (int r = 0; r < m; ++r)
			for (int c = 0; c < m; ++c)
				dG[r][c] = ch.is_log(i) ? G[r][c].tderiv(i) : G[r][c].deriv(i);
		RMat lhs = rmat_add(dG, rmat_mul(Ha.B[i], G));
		RMat rhs = rmat_mul(G, Hb.B[i]);
		RMat defect = rmat_sub(lhs, rhs);
		if (!rmat_is_zero(defect))
		{
			if (witness)
				for (int r = 0; r < m; ++r)
					for (int c = 0; c < m; ++c)
						if (!defect[r][c].is_zero())
							*witness = "direction " + std::to_string(i + 1) + " entry (" +
							           std::to_string(r + 1) + "," + std::to_string(c + 1) + "): " +
							           defect[r][c].str();
			return false;
		}
	}
	return true;
}

// ---------------------------------------------------------------------------
// gradings of the pushed-forward complex (standard lifting only)

/// encode a vector in F_p^n as an integer in base p
inline long encode_residue(const std::vector<int> &v, int p)
{
	long code = 0;
	for (size_t i = v.size(); i-- > 0;)
		code = code * p + fp_red(v[i], p);
	return code;
}

/// residue class of a fine monomial basis element t^e ω_I: (e + 1_{I nonlog}) mod p
inline long v_class(const Chart &ch, const ExpVec &e, Subset I)
{
	std::vector<int> v(ch.n);
	for (int i = 0; i < ch.n; ++i)
	{
		int x = e[i] % ch.p;
		if ((I & (Subset(1) << i)) && !ch.is_log(i))
			x = (x + 1) % ch.p;
		v[i] = x;
	}
	return encode_residue(v, ch.p);
}

/// A pushed-forward de Rham-side complex with a residue grading on the
/// selector subcomplex.  Requires the standard lifting; every basis vector of
/// the subcomplex must be residue-homogeneous.
struct GradedFStar
{
	ComplexModel ambient; // full de Rham model on the fine module
	Subcomplex sub;
	SelectorKind kind = SelectorKind::Full;
	int widx = 0;
	std::vector<std::vector<long>> vclass; // per degree, per subcomplex basis column

	/// stratum of one residue class as a complex
	ChainComplex stratum(long vcode) const
	{
		const ChainComplex &C = sub.cx;
		std::vector<std::vector<int>> sel(C.dims.size());
		for (int q = C.lo; q <= C.hi; ++q)
			for (int j = 0; j < C.dim(q); ++j)
				if (vclass[q - C.lo][j] == vcode)
					sel[q - C.lo].push_back(j);
		std::vector<int> dims;
		for (auto &s : sel)
			dims.push_back((int)s.size());
		ChainComplex S(C.p, C.lo, dims);
		for (int q = C.lo; q < C.hi; ++q)
		{
			auto &rows = sel[q + 1 - C.lo];
			auto &cols = sel[q - C.lo];
			const FpMatrix &D = C.diff(q);
			for (size_t j = 0; j < cols.size(); ++j)
			{
				// the stratum must be closed under the differential
				for (int i = 0; i < C.dim(q + 1); ++i)
					if (D(i, cols[j]))
					{
						if (vclass[q + 1 - C.lo][i] != vcode)
							throw Error("stratum not closed under the differential");
					}
				for (size_t i = 0; i < rows.size(); ++i)
					S.diff(q)((int)i, (int)j) = D(rows[i], cols[j]);
			}
		}
		for (int q = C.lo; q <= C.hi; ++q)
			for (int j : sel[q - C.lo])
				S.label[q - C.lo].push_back(C.label_of(q, j));
		return S;
	}

	std::vector<long> residues_present() const
	{
		std::vector<long> out;
		for (auto &per_deg : vclass)
			for (long v : per_deg)
				if (std::find(out.begin(), out.end(), v) == out.end())
					out.push_back(v);
		std::sort(out.begin(), out.end());
		return out;
	}
};

/// de Rham side of the inverse Cartier transform of a (possibly deformed)
/// field, as a graded selector complex over the pushforward basis
inline GradedFStar fstar_complex(const HiggsModule &field, const LiftingDatum &F, SelectorKind kind,
                                 int widx = 0)
{
	if (!F.is_standard())
		throw Error("the graded decomposition needs the standard lifting");
	GradedFStar G;
	G.ambient = lambda_complex_model(cartier_connection(field, F));
	G.kind = kind;
	G.widx = widx;
	G.sub = selector_subcomplex(G.ambient, kind, widx);
	const Chart &ch = field.chart;
	long md = G.ambient.mod.fp_dim();
	for (int q = 0; q <= ch.n; ++q)
	{
		std::vector<long> vc;
		const FpMatrix &B = G.sub.basis[q];
		for (int j = 0; j < B.cols; ++j)
		{
			long code = -1;
			for (int i = 0; i < B.rows; ++i)
			{
				if (!B(i, j))
					continue;
				Subset I = G.ambient.subsets[q][i / md];
				auto [mj, e] = G.ambient.mod.label(i % md);
				long c = v_class(ch, e, I);
				if (code < 0)
					code = c;
				else if (code != c)
					throw Error("subcomplex basis vector is not residue-homogeneous");
			}
			vc.push_back(code);
		}
		G.vclass.push_back(std::move(vc));
	}
	return G;
}

/// abstract Koszul model of a stratum: operators v_i id + t_i^{eps_i} Theta_i
/// on the coarse module, with the exponent pattern depending on the flavor
inline ChainComplex kv_koszul_model(const HiggsModule &field, const std::vector<int> &v)
{
	const Chart &ch = field.chart;
	ChartModule mod{ch.coarse(), field.m};
	std::vector<FpMatrix> ops;
	for (int i = 0; i < ch.n; ++i)
	{
		int eps = (!ch.is_log(i) && v[i] % ch.p != 0) ? 1 : 0;
		RMat A = field.theta[i];
		if (eps)
		{
			RMat B = rmat_zero(ch.coarse(), field.m);
			for (int r = 0; r < field.m; ++r)
				for (int c = 0; c < field.m; ++c)
					B[r][c] = A[r][c].mul_var(i);
			A = std::move(B);
		}
		FpMatrix op = mod.linearize(A);
		if (v[i] % ch.p)
			op = op + FpMatrix::identity(ch.p, (int)mod.fp_dim()).scale(v[i]);
		ops.push_back(std::move(op));
	}
	return koszul(ch.p, (int)mod.fp_dim(), ops);
}

inline std::vector<int> decode_residue(long code, int p, int n)
{
	std::vector<int> v(n);
	for (int i = 0; i < n; ++i)
	{
		v[i] = (int)(code % p);
		code /= p;
	}
	return v;
}

/// stratum extraction; for the full selector the result is cross-checked
/// against the abstract Koszul model by rank comparison
inline ChainComplex kv_subcomplex(const GradedFStar &G, const HiggsModule &field,
                                  const std::vector<int> &v)
{
	long code = encode_residue(v, field.chart.p);
	ChainComplex S = G.stratum(code);
	if (G.kind == SelectorKind::Full)
	{
		ChainComplex K = kv_koszul_model(field, v);
		auto hs = homology_ranks(S), hk = homology_ranks(K);
		for (int q = 0; q <= field.chart.n; ++q)
		{
			if (S.dim(q) != K.dim(q))
				throw Error("stratum and Koszul model dimensions differ at degree " + std::to_string(q));
			if (hs[q].dim_h != hk[q].dim_h)
				throw Error("stratum and Koszul model homology differ at degree " + std::to_string(q));
		}
	}
	return S;
}

/// the local Cartier map on the ambient model: basis element m_j t^mu ⊗ ω_I
/// of the coarse-side complex goes to F^*(m_j t^mu) ⊗ ζ(ω_{i_1})∧..∧ζ(ω_{i_q})
inline std::vector<uint8_t> cartier_image_of_basis(const ComplexModel &src, const ComplexModel &tgt,
                                                   const LiftingDatum &F, int q, Subset I, long mi)
{
	const Chart &ch = src.chart;
	auto [j, mu] = src.mod.label(mi);
	RingElement pulled = frobenius(ch, RingElement::monomial(src.mod.ring, mu));
	LogForm omega = LogForm::scalar(ch, ch.fine(), pulled);
	for (int i : subset_elems(I))
		omega = omega.wedge(F.zeta(i));
	std::map<Subset, RVec> f;
	for (auto &[J, c] : omega.comps)
	{
		RVec v(src.mod.m, RingElement::zero(ch.fine()));
		v[j] = c;
		auto it = f.find(J);
		if (it == f.end())
			f.emplace(J, v);
		else
			for (int k = 0; k < src.mod.m; ++k)
				it->second[k] = it->second[k] + v[k];
	}
	return tgt.place_form(q, f);
}

// ---------------------------------------------------------------------------
// Hodge pairs

/// Matched pair of complex selectors: a Higgs-side selector on (E,theta) and
/// the same selector on the inverse Cartier transform.  Type IV is the
/// composite convention around one fiber of g; the selector there records
/// whether the weight or the adapted flavor is in force.
struct HodgePair
{
	enum class Type
	{
		I,
		IWeight,
		II,
		III,
		IV
	};
	Type type = Type::I;
	HiggsModule E;
	LiftingDatum lift;
	int level = 0;
	int widx = 0;         // IWeight, or the weight flavor of IV
	int fiber_lambda = 0; // IV: the fiber value; the chart is centered on it
	bool iv_weight_flavor = false;

	SelectorKind selector() const
	{
		switch (type)
		{
		case Type::I:
			return SelectorKind::Full;
		case Type::IWeight:
			return SelectorKind::Weight;
		case Type::II:
			return SelectorKind::Intersection;
		case Type::III:
			return SelectorKind::Kontsevich;
		default:
			return iv_weight_flavor ? SelectorKind::Weight : SelectorKind::Kontsevich;
		}
	}
	int selector_widx() const { return type == Type::IWeight ? widx : (type == Type::IV ? widx : 0); }
};

inline HodgePair build_hodge_pair(HodgePair::Type type, const HiggsModule &E, const LiftingDatum &lift,
                                  int widx = 0, int fiber_lambda = 0, bool iv_weight_flavor = false)
{
	HodgePair pair;
	pair.type = type;
	pair.E = E;
	pair.lift = lift;
	pair.widx = widx;
	pair.fiber_lambda = fiber_lambda;
	pair.iv_weight_flavor = iv_weight_flavor;
	pair.level = nilpotency_level(E);
	if (pair.level < 0 || pair.level > E.chart.p - 1)
		throw Error("hodge pair needs nilpotency level <= p-1");
	if (type == HodgePair::Type::IWeight && !E.pole_free())
		throw Error("pole violation: the weight pair needs a field without pole along the divisor");
	if ((type == HodgePair::Type::III || type == HodgePair::Type::IV) && E.chart.s < 1)
		throw Error("missing chart parameter s");
	if (type == HodgePair::Type::IV && !E.is_zero_field())
		throw Error("the composite pair requires a zero field");
	return pair;
}

/// both sides of the pair, optionally twisted by f (Higgs side by -df on the
/// coarse ring, de Rham side by +df on the fine ring)
struct PairComplexes
{
	Subcomplex higgs;
	Subcomplex derham;
	ComplexModel higgs_ambient;
	ComplexModel derham_ambient;
};

inline PairComplexes realize_pair(const HodgePair &pair, const RingElement *f_fine = nullptr)
{
	PairComplexes out;
	HiggsModule Eh = pair.E;
	LambdaConnection H = inverse_cartier_local(pair.E, pair.lift);
	if (f_fine)
	{
		Eh = twist_exact(Eh, coarsen(pair.E.chart, *f_fine), -1);
		H = twist_exact(H, *f_fine, +1);
	}
	out.higgs_ambient = higgs_complex_model(Eh);
	out.derham_ambient = lambda_complex_model(H);
	out.higgs = selector_subcomplex(out.higgs_ambient, pair.selector(), pair.selector_widx());
	out.derham = selector_subcomplex(out.derham_ambient, pair.selector(), pair.selector_widx());
	return out;
}

struct CartierQis
{
	Subcomplex source; // selector of the Higgs-side complex
	GradedFStar target;
	ChainMap map; // source.cx -> target.sub.cx
	Verdict chain_map;
	Verdict quasi_iso;
	Verdict onto_zero_stratum; // image spans exactly the residue-0 stratum
};

/// the local Cartier quasi-isomorphism for one selector kind
inline CartierQis local_cartier_qis(const HiggsModule &field, const LiftingDatum &F,
                                    SelectorKind kind, int widx = 0)
{
	CartierQis out;
	ComplexModel higgs = higgs_complex_model(field);
	out.source = selector_subcomplex(higgs, kind, widx);
	out.target = fstar_complex(field, F, kind, widx);
	const Chart &ch = field.chart;
	long md = higgs.mod.fp_dim();
	out.map = ChainMap(out.source.cx, out.target.sub.cx, 0);
	for (int q = 0; q <= ch.n; ++q)
	{
		const FpMatrix &B = out.source.basis[q];
		if (B.cols == 0)
			continue;
		FpMatrix images(ch.p, out.target.ambient.cx.dim(q), B.cols);
		for (int col = 0; col < B.cols; ++col)
		{
			std::vector<uint8_t> acc(out.target.ambient.cx.dim(q), 0);
			for (int i = 0; i < B.rows; ++i)
			{
				if (!B(i, col))
					continue;
				Subset I = higgs.subsets[q][i / md];
				auto img = cartier_image_of_basis(higgs, out.target.ambient, F, q, I, i % md);
				for (size_t k = 0; k < acc.size(); ++k)
					acc[k] = (uint8_t)((acc[k] + B(i, col) * img[k]) % ch.p);
			}
			images.set_col(col, acc);
		}
		out.map.component(q) = out.target.sub.coords(q, images); // throws if not inside the selector
	}
	out.chain_map = certify_chain_map(out.map);
	out.quasi_iso = out.chain_map.pass ? certify_quasi_iso(out.map)
	                                   : Verdict::fail("quasi_iso", out.chain_map.witness_degree,
	                                                   out.chain_map.witness);
	// image versus the residue-0 stratum (standard lifting keeps this exact)
	out.onto_zero_stratum = Verdict::ok("onto_zero_stratum");
	for (int q = 0; q <= ch.n; ++q)
	{
		int zero_dim = 0;
		for (long c : out.target.vclass[q])
			if (c == 0)
				++zero_dim;
		const FpMatrix &mq = out.map.component_or_zero(q);
		if (rank(mq) != std::min(zero_dim, out.source.cx.dim(q)) || out.source.cx.dim(q) != zero_dim)
		{
			out.onto_zero_stratum = Verdict::fail("onto_zero_stratum", q, "stratum dimension mismatch");
			break;
		}
		for (int col = 0; col < mq.cols; ++col)
			for (int row = 0; row < mq.rows; ++row)
				if (mq(row, col) && out.target.vclass[q][row] != 0)
				{
					out.onto_zero_stratum = Verdict::fail("onto_zero_stratum", q,
					                                      out.target.sub.cx.label_of(q, row));
					break;
				}
	}
	return out;
}

} // namespace cartierlab
