#pragma once

#include "cartierlab/cartier.hpp"
#include "cartierlab/splitting.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace cartierlab {

using Rational = boost::multiprecision::cpp_rational;

/// coefficients a_0..a_K of exp(sum_j x^{p^j}/p^j) truncated past degree K,
/// computed in exact rational arithmetic
inline std::vector<Rational> artin_hasse_series(int p, int K)
{
	std::vector<Rational> y(K + 1, 0);
	Rational denom = 1;
	for (long pj = p; pj <= K; pj *= p)
	{
		denom *= p;
		y[pj] = 1 / denom;
	}
	if (K >= 1)
		y[1] = 1;
	std::vector<Rational> acc(K + 1, 0), term(K + 1, 0);
	acc[0] = 1;
	term[0] = 1;
	for (int k = 1; k <= K; ++k)
	{
		// term <- term * y / k
		std::vector<Rational> next(K + 1, 0);
		for (int a = 0; a <= K; ++a)
		{
			if (term[a] == 0)
				continue;
			for (int b = 1; a + b <= K; ++b)
				if (y[b] != 0)
					next[a + b] += term[a] * y[b];
		}
		for (auto &x : next)
			x /= k;
		term = std::move(next);
		bool zero = true;
		for (auto &x : term)
			if (x != 0)
			{
				zero = false;
				break;
			}
		for (int a = 0; a <= K; ++a)
			acc[a] += term[a];
		if (zero)
			break;
	}
	return acc;
}

/// reduce an exact rational mod p; fires when the denominator is divisible by p
inline int reduce_rational(const Rational &x, int p)
{
	auto num = boost::multiprecision::numerator(x);
	auto den = boost::multiprecision::denominator(x);
	if (den % p == 0)
		throw Error("artin-hasse coefficient is not p-integral");
	int n = (int)(long)(num % p);
	int d = (int)(long)(den % p);
	return fp_mul(fp_red(n, p), fp_inv(fp_red(d, p), p), p);
}

struct ArtinHasseUnit
{
	RingElement f; // fine, no constant term
	RingElement G; // the unit expansion
	LogForm u;     // sum_j f^{p^j - 1} df
	int j_max = 0; // largest j contributing to u
};

inline ArtinHasseUnit artin_hasse(const Chart &ch, const RingElement &f)
{
	if (f.ring != ch.fine())
		throw Error("artin_hasse expects a fine ring element");
	if (!f.is_nilpotent())
		throw Error("artin_hasse needs a function without constant term");
	ArtinHasseUnit out;
	out.f = f;
	// largest surviving power of f bounds the series degree
	int K = 0;
	{
		RingElement pw = RingElement::one(ch.fine());
		while (true)
		{
			pw = pw * f;
			if (pw.is_zero())
				break;
			++K;
		}
	}
	auto series = artin_hasse_series(ch.p, K);
	out.G = RingElement::zero(ch.fine());
	RingElement pw = RingElement::one(ch.fine());
	for (int k = 0; k <= K; ++k)
	{
		int c = reduce_rational(series[k], ch.p);
		if (c)
			out.G = out.G + pw.scale(c);
		pw = pw * f;
	}
	LogForm df = d_of(ch, f);
	out.u = LogForm(ch, ch.fine(), 1);
	long pj = 1;
	for (int j = 0;; ++j)
	{
		RingElement fp = f.pow(pj - 1); // f^{p^j - 1}
		if (j > 0 && fp.is_zero())
			break;
		for (auto &[I, c] : df.comps)
			out.u.add_term(I, fp * c);
		out.j_max = j;
		pj *= ch.p;
	}
	return out;
}

/// defining identity dG = G·u, checked exactly
inline bool artin_hasse_identity(const Chart &ch, const ArtinHasseUnit &ah)
{
	LogForm lhs = d_of(ch, ah.G);
	LogForm rhs = ah.u.mul(ah.G);
	return lhs == rhs;
}

// ---------------------------------------------------------------------------
// the deformation of a twisted field

struct ThetaDeformation
{
	HiggsModule E;   // the undeformed field
	RingElement f;   // fine, no constant term
	LogForm twist;   // sum over parts of f_a^{p^j-1} df_a, fine coefficients
	HiggsModule deformed;
	std::vector<RMat> vartheta;     // coarse automorphisms, one per direction
	std::vector<RMat> vartheta_inv;
	std::vector<RingElement> parts_fine; // the components f_a
};

/// log directions use theta_i itself, plain directions t_i theta_i
inline RMat deformation_generator(const HiggsModule &E, int i)
{
	if (E.chart.is_log(i))
		return E.theta[i];
	RMat X = E.theta[i];
	for (auto &row : X)
		for (auto &e : row)
			e = e.mul_var(i);
	return X;
}

inline ThetaDeformation theta_deformation(const HiggsModule &E, const RingElement &f)
{
	const Chart &ch = E.chart;
	if (f.ring != ch.fine())
		throw Error("theta_deformation expects a fine ring element");
	if (!f.is_nilpotent())
		throw Error("constant part of f must vanish");
	int lvl = nilpotency_level(E);
	if (lvl < 0 || lvl > ch.p - 1)
		throw Error("theta_deformation needs nilpotency level <= p-1");
	ThetaDeformation out;
	out.E = E;
	out.f = f;
	out.twist = LogForm(ch, ch.fine(), 1);
	for (auto &part : decompose_function(ch, f))
	{
		RingElement fa = frobenius(ch, part.h) * RingElement::monomial(ch.fine(), part.alpha);
		out.parts_fine.push_back(fa);
		LogForm dfa = d_of(ch, fa);
		long pj = 1;
		for (int j = 0;; ++j)
		{
			RingElement pw = fa.pow(pj - 1);
			if (j > 0 && pw.is_zero())
				break;
			for (auto &[I, c] : dfa.comps)
				out.twist.add_term(I, pw * c);
			pj *= ch.p;
		}
	}
	// Theta_i = theta_i - (coarse twist component)
	std::vector<RMat> th = E.theta;
	for (int i = 0; i < ch.n; ++i)
	{
		auto it = out.twist.comps.find(Subset(1) << i);
		if (it == out.twist.comps.end())
			continue;
		RMat shift = rmat_scale(rmat_identity(ch.coarse(), E.m), coarsen(ch, it->second));
		th[i] = rmat_sub(th[i], shift);
	}
	out.deformed = HiggsModule(ch, E.m, th);
	// vartheta_i = 1 + sum_{j>=1} sum_{q<p} u_i^{p^j-q-1} X_i^q with
	// u_i = t_i d_i f and X_i the direction generator
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement u = coarsen(ch, f.tderiv(i));
		RMat X = deformation_generator(E, i);
		RMat vt = rmat_identity(ch.coarse(), E.m);
		long pj = ch.p;
		for (int j = 1;; ++j)
		{
			bool contributed = false;
			RMat Xq = rmat_identity(ch.coarse(), E.m);
			for (int q = 0; q < ch.p; ++q)
			{
				long expo = pj - q - 1;
				RingElement upow = u.pow(expo);
				if (!upow.is_zero() && !rmat_is_zero(Xq))
				{
					vt = rmat_add(vt, rmat_scale(Xq, upow));
					contributed = true;
				}
				Xq = rmat_mul(Xq, X);
			}
			if (!contributed)
				break;
			pj *= ch.p;
		}
		out.vartheta.push_back(vt);
		out.vartheta_inv.push_back(rmat_unipotent_inverse(vt));
	}
	return out;
}

/// the quotient identity vartheta_i (X_i - u_i) = X_i - sum_j u_i^{p^j},
/// checked exactly in every direction
inline bool deformation_identities(const ThetaDeformation &def, std::string *witness = nullptr)
{
	const Chart &ch = def.E.chart;
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement u = coarsen(ch, def.f.tderiv(i));
		RMat X = deformation_generator(def.E, i);
		RMat lhs = rmat_mul(def.vartheta[i],
		                    rmat_sub(X, rmat_scale(rmat_identity(ch.coarse(), def.E.m), u)));
		RMat rhs = X;
		long pj = 1;
		for (int j = 0;; ++j)
		{
			RingElement upow = u.pow(pj);
			if (upow.is_zero())
				break;
			rhs = rmat_sub(rhs, rmat_scale(rmat_identity(ch.coarse(), def.E.m), upow));
			pj *= ch.p;
		}
		if (!rmat_is_zero(rmat_sub(lhs, rhs)))
		{
			if (witness)
				*witness = "direction " + std::to_string(i + 1);
			return false;
		}
		// the deformed component agrees: X_i^Theta = vartheta_i (X_i - u_i)
		RMat Xdef = deformation_generator(def.deformed, i);
		if (!rmat_is_zero(rmat_sub(Xdef, lhs)))
		{
			if (witness)
				*witness = "deformed component, direction " + std::to_string(i + 1);
			return false;
		}
	}
	return true;
}

// ---------------------------------------------------------------------------
// the chain isomorphisms between the twisted and the deformed complexes

enum class PsiVariant
{
	Plain,  // multiply by the direction automorphisms
	Adapted // first basis form replaced by dlog g (needs chart.s)
};

struct PsiIso
{
	Subcomplex source; // full complex of (E, theta - df)
	Subcomplex target; // full complex of (E, Theta)
	ChainMap map;
	ChainMap inverse;
	Verdict certify_forward;
	Verdict certify_iso;
};

/// expand the adapted wedge with index list K (0-based, ascending) into the
/// standard basis; columns of P give the adapted forms
inline LogForm expand_adapted(const Chart &ch, Ring rg, const std::vector<int> &K, const FpMatrix &P,
                              const RingElement &coeff)
{
	LogForm acc = LogForm::scalar(ch, rg, coeff);
	for (int k : K)
	{
		LogForm w(ch, rg, 1);
		for (int l = 0; l < ch.n; ++l)
			if (P(l, k))
				w.add_term(Subset(1) << l, RingElement::constant(rg, P(l, k)));
		acc = acc.wedge(w);
	}
	return acc;
}

inline PsiIso psi_iso(const ThetaDeformation &def, PsiVariant variant)
{
	const Chart &ch = def.E.chart;
	HiggsModule twisted = twist_exact(def.E, coarsen(ch, def.f), -1);
	ComplexModel src = higgs_complex_model(twisted);
	ComplexModel tgt = higgs_complex_model(def.deformed);
	PsiIso out;
	out.source = selector_subcomplex(src, SelectorKind::Full);
	out.target = selector_subcomplex(tgt, SelectorKind::Full);

	std::vector<RMat> vt = def.vartheta, vti = def.vartheta_inv;
	FpMatrix P = FpMatrix::identity(ch.p, ch.n);
	if (variant == PsiVariant::Adapted)
	{
		if (ch.s < 1)
			throw Error("the adapted isomorphism needs the chart parameter s");
		for (int i = 1; i < ch.s; ++i)
			P(i, 0) = 1; // first adapted form is dlog g = sum of the first s forms
		for (int i = 1; i < ch.s; ++i)
		{
			// direction i against dlog t_i: u' = (t_i d_i - t_1 d_1) f and the
			// generator theta_i - theta_1
			RingElement u = coarsen(ch, def.f.tderiv(i) - def.f.tderiv(0));
			RMat X = rmat_sub(def.E.theta[i], def.E.theta[0]);
			RMat v = rmat_identity(ch.coarse(), def.E.m);
			long pj = ch.p;
			for (int j = 1;; ++j)
			{
				bool contributed = false;
				RMat Xq = rmat_identity(ch.coarse(), def.E.m);
				for (int q = 0; q < ch.p; ++q)
				{
					RingElement upow = u.pow(pj - q - 1);
					if (!upow.is_zero() && !rmat_is_zero(Xq))
					{
						v = rmat_add(v, rmat_scale(Xq, upow));
						contributed = true;
					}
					Xq = rmat_mul(Xq, X);
				}
				if (!contributed)
					break;
				pj *= ch.p;
			}
			vt[i] = v;
			vti[i] = rmat_unipotent_inverse(v);
		}
	}

	auto build = [&](const ComplexModel &a, const ComplexModel &b, const std::vector<RMat> &autos) {
		ChainMap f(a.cx, b.cx, 0);
		OrderedSplitting sp(ch, std::vector<int>(ch.n, 1), P);
		for (int q = 0; q <= ch.n; ++q)
		{
			FpMatrix &mq = f.component(q);
			long md = a.mod.fp_dim();
			for (size_t bi = 0; bi < a.subsets[q].size(); ++bi)
			{
				Subset K = a.subsets[q][bi];
				for (long mi = 0; mi < md; ++mi)
				{
					auto [j, mu] = a.mod.label(mi);
					LogForm e = LogForm::basis(ch, ch.coarse(), K,
					                           RingElement::monomial(ch.coarse(), mu));
					// adapted coefficients of the source wedge
					auto coeffs = adapt_coefficients(e, sp);
					std::vector<uint8_t> acc(b.cx.dim(q), 0);
					for (auto &[Kp, c] : coeffs)
					{
						RVec v(a.mod.m, RingElement::zero(ch.coarse()));
						v[j] = c;
						for (int l : subset_elems(Kp))
							v = rmat_apply(autos[l], v);
						// back to the standard basis
						for (int comp = 0; comp < a.mod.m; ++comp)
						{
							if (v[comp].is_zero())
								continue;
							LogForm back = expand_adapted(ch, ch.coarse(), subset_elems(Kp), P, v[comp]);
							for (auto &[L, cc] : back.comps)
							{
								long off = (long)b.subset_pos(q, L) * md;
								for (auto &[ex, coef] : cc.c)
									acc[off + b.mod.index(comp, ex)] =
									    (uint8_t)((acc[off + b.mod.index(comp, ex)] + coef) % ch.p);
							}
						}
					}
					mq.set_col((int)(bi * md + mi), acc);
				}
			}
		}
		return f;
	};
	out.map = build(src, tgt, vt);
	out.inverse = build(tgt, src, vti);
	out.certify_forward = certify_chain_map(out.map);
	Verdict back = certify_chain_map(out.inverse);
	bool iso = out.certify_forward.pass && back.pass;
	if (iso)
	{
		ChainMap c1 = out.inverse.compose(out.map);
		ChainMap c2 = out.map.compose(out.inverse);
		for (int q = 0; q <= ch.n; ++q)
		{
			if (!(c1.component(q) == FpMatrix::identity(ch.p, src.cx.dim(q))) ||
			    !(c2.component(q) == FpMatrix::identity(ch.p, tgt.cx.dim(q))))
			{
				iso = false;
				out.certify_iso = Verdict::fail("iso", q, "two-sided inverse fails");
				break;
			}
		}
	}
	if (iso)
		out.certify_iso = Verdict::ok("iso");
	else if (out.certify_iso.claim.empty())
		out.certify_iso = Verdict::fail("iso", out.certify_forward.pass ? back.witness_degree
		                                                                : out.certify_forward.witness_degree,
		                                "not a chain map");
	return out;
}

// ---------------------------------------------------------------------------
// multiplication by the Artin-Hasse unit conjugates the twisted connection
// into the transform of the deformed field

/// exact operator identity G (B_i + c_i) = D_i(G) + B^Theta_i G, where the
/// left side is the +df twist of the transform of theta and the right side
/// the transform of Theta
inline bool ah_conjugate(const ThetaDeformation &def, const LiftingDatum &F, std::string *witness = nullptr)
{
	const Chart &ch = def.E.chart;
	RingElement G = RingElement::one(ch.fine());
	for (auto &fa : def.parts_fine)
		G = G * artin_hasse(ch, fa).G;
	LambdaConnection lhs = twist_exact(inverse_cartier_local(def.E, F), def.f, +1);
	LambdaConnection rhs = cartier_connection(def.deformed, F);
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement dG = ch.is_log(i) ? G.tderiv(i) : G.deriv(i);
		RMat a = rmat_scale(lhs.B[i], G);
		RMat b = rmat_add(rmat_scale(rmat_identity(ch.fine(), def.E.m), dG),
		                  rmat_scale(rhs.B[i], G));
		RMat defect = rmat_sub(a, b);
		if (!rmat_is_zero(defect))
		{
			if (witness)
				for (auto &row : defect)
					for (auto &e : row)
						if (!e.is_zero())
						{
							*witness = "direction " + std::to_string(i + 1) +
							           ", defect monomials: " + e.str();
							return false;
						}
			return false;
		}
	}
	return true;
}

// ---------------------------------------------------------------------------
// the composite comparison for a twisted pair: the twisted Higgs complex maps
// through the deformed complex and the residue-zero stratum into the
// pushforward of the twisted de Rham complex, conjugated back by the
// Artin-Hasse unit

struct TwistedCartierQis
{
	Subcomplex source; // selector of (E, theta - df)
	Subcomplex target; // selector of the +df twist of the transform
	ChainMap map;
	Verdict chain_map;
	Verdict quasi_iso;
};

inline TwistedCartierQis twisted_cartier_qis(const HiggsModule &E, const RingElement &f,
                                             const LiftingDatum &F, SelectorKind kind, int widx = 0)
{
	const Chart &ch = E.chart;
	ThetaDeformation def = theta_deformation(E, f);
	std::string witness;
	if (!ah_conjugate(def, F, &witness))
		throw Error("conjugation identity failed: " + witness);
	PsiIso psi = psi_iso(def, kind == SelectorKind::Kontsevich ? PsiVariant::Adapted : PsiVariant::Plain);
	if (!psi.certify_iso.pass)
		throw Error("deformation isomorphism failed");
	CartierQis cq = local_cartier_qis(def.deformed, F, kind, widx);

	TwistedCartierQis out;
	HiggsModule Et = twist_exact(E, coarsen(ch, f), -1);
	ComplexModel src_model = higgs_complex_model(Et);
	out.source = selector_subcomplex(src_model, kind, widx);
	LambdaConnection Ht = twist_exact(inverse_cartier_local(E, F), f, +1);
	ComplexModel tgt_model = lambda_complex_model(Ht);
	out.target = selector_subcomplex(tgt_model, kind, widx);

	RingElement G = RingElement::one(ch.fine());
	for (auto &fa : def.parts_fine)
		G = G * artin_hasse(ch, fa).G;
	FpMatrix ginv_blk = cq.target.ambient.mod.mul_op(G.inv());

	out.map = ChainMap(out.source.cx, out.target.cx, 0);
	for (int q = 0; q <= ch.n; ++q)
	{
		if (out.source.cx.dim(q) == 0)
			continue;
		// selector of the twisted side -> deformed side (psi is ambient)
		FpMatrix step1 = psi.map.component(q) * out.source.basis[q];
		FpMatrix step2 = cq.map.component_or_zero(q) * cq.source.coords(q, step1);
		// back to the ambient pushforward, multiply by G^{-1}, re-coordinate
		FpMatrix amb = cq.target.sub.basis[q] * step2;
		long md = cq.target.ambient.mod.fp_dim();
		FpMatrix big(ch.p, amb.rows, amb.rows);
		for (size_t bi = 0; (long)bi * md < amb.rows; ++bi)
			for (int r = 0; r < ginv_blk.rows; ++r)
				for (int c = 0; c < ginv_blk.cols; ++c)
					if (ginv_blk(r, c))
						big((int)(bi * md + r), (int)(bi * md + c)) = ginv_blk(r, c);
		out.map.component(q) = out.target.coords(q, big * amb);
	}
	out.chain_map = certify_chain_map(out.map);
	out.quasi_iso = out.chain_map.pass
	                    ? certify_quasi_iso(out.map)
	                    : Verdict::fail("quasi_iso", out.chain_map.witness_degree, out.chain_map.witness);
	return out;
}

// ---------------------------------------------------------------------------
// formal transform of a composite pair along one fiber

struct FormalGTransform
{
	RingElement g;       // f - lambda, fine, nilpotent
	Subcomplex higgs;    // selector with differential  -sum_{j>=0} g^{p^j-1} dg
	Subcomplex derham;   // selector with differential  d - sum_{j>=1} g^{p^j-1} dg
	Verdict isos[4];     // the four comparison isomorphisms
};

/// scalar-valued 1-form sum_{j>=start} g^{p^j-1} dg
inline LogForm g_twist_form(const Chart &ch, const RingElement &g, int start)
{
	LogForm dg = d_of(ch, g);
	LogForm out(ch, ch.fine(), 1);
	long pj = 1;
	for (int j = 0;; ++j)
	{
		RingElement pw = g.pow(pj - 1);
		if (j > 0 && pw.is_zero())
			break;
		if (j >= start)
			for (auto &[I, c] : dg.comps)
				out.add_term(I, pw * c);
		pj *= ch.p;
	}
	return out;
}

inline HiggsModule field_from_form(const Chart &ch, int m, const LogForm &w, int sign)
{
	std::vector<RMat> th(ch.n, rmat_zero(ch.coarse(), m));
	for (auto &[I, c] : w.comps)
	{
		int i = subset_elems(I)[0];
		th[i] = rmat_scale(rmat_identity(ch.coarse(), m), coarsen(ch, c).scale(sign));
	}
	return HiggsModule(ch, m, th);
}

inline Verdict certify_unit_chain_iso(const ChainMap &f)
{
	Verdict cm = certify_chain_map(f);
	if (!cm.pass)
		return cm;
	for (int q = f.src.lo; q <= f.src.hi; ++q)
		if (rank(f.component_or_zero(q)) != f.src.dim(q) || f.src.dim(q) != f.tgt.dim(q))
			return Verdict::fail("invertible", q, "rank drop");
	return Verdict::ok("invertible chain map");
}

inline FormalGTransform formal_g_transform(const HodgePair &pair, const RingElement &f_fine, int lambda)
{
	if (pair.type != HodgePair::Type::IV)
		throw Error("the formal transform applies to composite pairs only");
	const Chart &ch = pair.E.chart;
	FormalGTransform out;
	out.g = f_fine - RingElement::constant(ch.fine(), lambda);
	if (!out.g.is_nilpotent())
		throw Error("the chart is not centered on the requested fiber");
	SelectorKind kind = pair.selector();
	int widx = pair.selector_widx();

	LogForm u_all = g_twist_form(ch, out.g, 0);  // sum_{j>=0}
	LogForm u_tail = g_twist_form(ch, out.g, 1); // sum_{j>=1}

	// transformed sides
	HiggsModule Eg = field_from_form(ch, pair.E.m, u_all, -1);
	ComplexModel higgs_model = higgs_complex_model(Eg);
	out.higgs = selector_subcomplex(higgs_model, kind, widx);
	LambdaConnection Hg = cartier_connection(HiggsModule::trivial(ch, pair.E.m), pair.lift);
	for (int i = 0; i < ch.n; ++i)
	{
		auto it = u_tail.comps.find(Subset(1) << i);
		if (it != u_tail.comps.end())
			Hg.B[i] = rmat_sub(Hg.B[i], rmat_scale(rmat_identity(ch.fine(), pair.E.m), it->second));
	}
	ComplexModel derham_model = lambda_complex_model(Hg);
	out.derham = selector_subcomplex(derham_model, kind, widx);

	// plain ±dg twists of the pair
	HiggsModule Et = twist_exact(HiggsModule::trivial(ch, pair.E.m), coarsen(ch, out.g), -1);
	ComplexModel higgs_twist = higgs_complex_model(Et);
	Subcomplex higgs_tw = selector_subcomplex(higgs_twist, kind, widx);
	LambdaConnection Ht = twist_exact(inverse_cartier_local(HiggsModule::trivial(ch, pair.E.m), pair.lift),
	                                  out.g, +1);
	ComplexModel derham_twist = lambda_complex_model(Ht);
	Subcomplex derham_tw = selector_subcomplex(derham_twist, kind, widx);

	// (1),(2): the completed model agrees with itself
	out.isos[0] = certify_unit_chain_iso(ChainMap::identity(higgs_tw.cx));
	out.isos[1] = certify_unit_chain_iso(ChainMap::identity(derham_tw.cx));

	// (3): multiplication by S^q in degree q, S = sum_{j>=0} g^{p^j-1}
	RingElement S(ch.fine());
	{
		long pj = 1;
		for (int j = 0;; ++j)
		{
			RingElement pw = out.g.pow(pj - 1);
			if (j > 0 && pw.is_zero())
				break;
			S = S + pw;
			pj *= ch.p;
		}
	}
	{
		ChainMap m3(higgs_tw.cx, out.higgs.cx, 0);
		RingElement Sc = coarsen(ch, S);
		RingElement Spow = RingElement::one(ch.coarse());
		for (int q = 0; q <= ch.n; ++q)
		{
			FpMatrix big(ch.p, higgs_model.cx.dim(q), higgs_model.cx.dim(q));
			FpMatrix blk = higgs_model.mod.mul_op(Spow);
			long md = higgs_model.mod.fp_dim();
			for (size_t bi = 0; bi < higgs_model.subsets[q].size(); ++bi)
				for (int r = 0; r < blk.rows; ++r)
					for (int c = 0; c < blk.cols; ++c)
						if (blk(r, c))
							big((int)(bi * md + r), (int)(bi * md + c)) = blk(r, c);
			m3.component(q) = out.higgs.coords(q, big * higgs_tw.basis[q]);
			Spow = Spow * Sc;
		}
		out.isos[2] = certify_unit_chain_iso(m3);
	}

	// (4): multiplication by the Artin-Hasse unit of g
	{
		ArtinHasseUnit ah = artin_hasse(ch, out.g);
		ChainMap m4(derham_tw.cx, out.derham.cx, 0);
		long md = derham_model.mod.fp_dim();
		FpMatrix blk = derham_model.mod.mul_op(ah.G);
		for (int q = 0; q <= ch.n; ++q)
		{
			FpMatrix big(ch.p, derham_model.cx.dim(q), derham_model.cx.dim(q));
			for (size_t bi = 0; bi < derham_model.subsets[q].size(); ++bi)
				for (int r = 0; r < blk.rows; ++r)
					for (int c = 0; c < blk.cols; ++c)
						if (blk(r, c))
							big((int)(bi * md + r), (int)(bi * md + c)) = blk(r, c);
			m4.component(q) = out.derham.coords(q, big * derham_tw.basis[q]);
		}
		out.isos[3] = certify_unit_chain_iso(m4);
	}
	return out;
}

} // namespace cartierlab
