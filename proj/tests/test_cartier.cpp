#include "cartierlab/cartier.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace cartierlab;

namespace {

RingElement random_fine(const Chart &ch, std::mt19937_64 &rng, int terms, bool nilpotent = false)
{
	RingElement f(ch.fine());
	for (int t = 0; t < terms; ++t)
	{
		ExpVec e(ch.n);
		bool zero = true;
		for (int i = 0; i < ch.n; ++i)
		{
			e[i] = (uint8_t)(rng() % ch.fine().cap);
			if (e[i])
				zero = false;
		}
		if (nilpotent && zero)
			continue;
		f.add_term(e, (int)(rng() % ch.p));
	}
	return f;
}

LiftingDatum random_lifting(const Chart &ch, std::mt19937_64 &rng)
{
	std::vector<RingElement> wg;
	for (int i = 0; i < ch.n; ++i)
		wg.push_back(random_fine(ch, rng, 3));
	return LiftingDatum(ch, wg);
}

HiggsModule random_level1(const Chart &ch, std::mt19937_64 &rng, bool pole_free = false)
{
	RMat base = rmat_zero(ch.coarse(), 2);
	base[0][1] = RingElement::one(ch.coarse());
	std::vector<RMat> th;
	for (int i = 0; i < ch.n; ++i)
	{
		RingElement c(ch.coarse());
		for (int t = 0; t < 2; ++t)
		{
			ExpVec e(ch.n);
			for (int k = 0; k < ch.n; ++k)
				e[k] = (uint8_t)(rng() % ch.M);
			c.add_term(e, (int)(rng() % ch.p));
		}
		if (pole_free && ch.is_log(i))
			c = c.mul_var(i);
		th.push_back(rmat_scale(base, c));
	}
	return HiggsModule(ch, 2, th);
}

} // namespace

TEST_CASE("lifting data and cocycle laws")
{
	std::mt19937_64 rng(41);
	for (int p : {3, 5})
	{
		Chart ch(p, 2, 1, 2);
		LiftingDatum a = random_lifting(ch, rng), b = random_lifting(ch, rng), c = random_lifting(ch, rng);
		for (int i = 0; i < ch.n; ++i)
		{
			REQUIRE(h_pair(a, b, i) + h_pair(b, c, i) == h_pair(a, c, i));
			LogForm lhs = b.zeta(i) - a.zeta(i);
			LogForm rhs = d_of(ch, h_pair(a, b, i));
			REQUIRE(lhs == rhs);
		}
	}
}

TEST_CASE("local inverse Cartier transform")
{
	SECTION("zero field, standard lifting")
	{
		Chart ch(3, 2, 1, 1);
		LambdaConnection H = inverse_cartier_local(HiggsModule::trivial(ch), LiftingDatum::standard(ch));
		REQUIRE(H.lambda == 1);
		REQUIRE(rmat_is_zero(H.B[0]));
		REQUIRE(rmat_is_zero(H.B[1]));
	}
	SECTION("zero field kills the lifting dependence")
	{
		Chart ch(3, 2, 1, 2);
		std::vector<RingElement> wg(2, RingElement::zero(ch.fine()));
		wg[1] = RingElement::variable(ch.fine(), 1, 2); // g_2 = t2^2
		LambdaConnection H = inverse_cartier_local(HiggsModule::trivial(ch), LiftingDatum(ch, wg));
		REQUIRE(rmat_is_zero(H.B[0]));
		REQUIRE(rmat_is_zero(H.B[1]));
	}
	SECTION("nilpotent field against a log form, standard lifting")
	{
		Chart ch(3, 2, 2, 1);
		RMat t0 = rmat_zero(ch.coarse(), 2);
		t0[0][1] = RingElement::one(ch.coarse());
		HiggsModule E(ch, 2, {t0, rmat_zero(ch.coarse(), 2)});
		LambdaConnection H = inverse_cartier_local(E, LiftingDatum::standard(ch));
		REQUIRE(H.B[0][0][1] == RingElement::one(ch.fine()));
		REQUIRE(rmat_is_zero(H.B[1]));
	}
	SECTION("level bound is enforced")
	{
		Chart ch(2, 1, 0, 1);
		RMat J = rmat_zero(ch.coarse(), 3);
		J[0][1] = J[1][2] = RingElement::one(ch.coarse()); // level 2 > p-1
		HiggsModule E(ch, 3, {J});
		REQUIRE_THROWS_AS(inverse_cartier_local(E, LiftingDatum::standard(ch)), Error);
	}
}

TEST_CASE("transition isomorphisms")
{
	std::mt19937_64 rng(43);
	Chart ch(5, 2, 1, 1);
	SECTION("zero field gives the identity")
	{
		LiftingDatum a = random_lifting(ch, rng), b = random_lifting(ch, rng);
		RMat G = transition_iso(HiggsModule::trivial(ch, 2), a, b);
		REQUIRE(rmat_is_zero(rmat_sub(G, rmat_identity(ch.fine(), 2))));
	}
	SECTION("equal liftings give the identity")
	{
		HiggsModule E = random_level1(ch, rng);
		LiftingDatum a = random_lifting(ch, rng);
		RMat G = transition_iso(E, a, a);
		REQUIRE(rmat_is_zero(rmat_sub(G, rmat_identity(ch.fine(), 2))));
	}
	SECTION("level-1 exponential is affine and intertwines exactly")
	{
		for (int rep = 0; rep < 5; ++rep)
		{
			HiggsModule E = random_level1(ch, rng);
			LiftingDatum a = random_lifting(ch, rng), b = random_lifting(ch, rng), c = random_lifting(ch, rng);
			RMat G = transition_iso(E, a, b);
			// G = id + (id ⊗ h) F^* theta at level 1
			RMat X = rmat_zero(ch.fine(), 2);
			for (int l = 0; l < ch.n; ++l)
				X = rmat_add(X, rmat_scale(rmat_frobenius(ch, E.theta[l]), h_pair(a, b, l)));
			REQUIRE(rmat_is_zero(rmat_sub(G, rmat_add(rmat_identity(ch.fine(), 2), X))));
			LambdaConnection Ha = inverse_cartier_local(E, a), Hb = inverse_cartier_local(E, b);
			std::string witness;
			REQUIRE(certify_transition(ch, G, Ha, Hb, &witness));
			// cocycle and inverse
			RMat Gbc = transition_iso(E, b, c), Gac = transition_iso(E, a, c);
			REQUIRE(rmat_is_zero(rmat_sub(rmat_mul(G, Gbc), Gac)));
			RMat Gba = transition_iso(E, b, a);
			REQUIRE(rmat_is_zero(rmat_sub(rmat_mul(G, Gba), rmat_identity(ch.fine(), 2))));
		}
	}
}

TEST_CASE("residue grading")
{
	SECTION("mixed log pattern")
	{
		Chart ch(3, 2, 1, 1);
		REQUIRE(v_class(ch, ExpVec{1, 0}, Subset(1) << 1) == encode_residue({1, 1}, 3));
	}
	SECTION("g-multiples on the adapted selector")
	{
		Chart ch(3, 2, 2, 1, 2);
		GradedFStar G = fstar_complex(HiggsModule::trivial(ch), LiftingDatum::standard(ch),
		                              SelectorKind::Kontsevich);
		// the degree-0 part consists of the g-multiples; g·1 itself carries
		// residue (1,1)
		REQUIRE(G.sub.cx.dim(0) > 0);
		bool found = false;
		for (int j = 0; j < G.sub.cx.dim(0); ++j)
			if (G.sub.cx.label_of(0, j) == "g·m1⊗ω{}")
			{
				found = true;
				REQUIRE(G.vclass[0][j] == encode_residue({1, 1}, 3));
			}
		REQUIRE(found);
	}
	SECTION("residue-zero stratum at p=3, n=1, log")
	{
		Chart ch(3, 1, 1, 1);
		GradedFStar G = fstar_complex(HiggsModule::trivial(ch), LiftingDatum::standard(ch),
		                              SelectorKind::Full);
		ChainComplex S = kv_subcomplex(G, HiggsModule::trivial(ch), {0});
		REQUIRE(S.dim(0) == 1);
		REQUIRE(S.dim(1) == 1);
		REQUIRE(S.diff(0).is_zero());
	}
	SECTION("strata exhaust the complex and refuse nonstandard liftings")
	{
		std::mt19937_64 rng(47);
		Chart ch(3, 2, 1, 1);
		HiggsModule E = random_level1(ch, rng);
		GradedFStar G = fstar_complex(E, LiftingDatum::standard(ch), SelectorKind::Full);
		std::vector<long> total(ch.n + 1, 0);
		for (long v = 0; v < 9; ++v)
		{
			ChainComplex S = G.stratum(v);
			for (int q = 0; q <= ch.n; ++q)
				total[q] += S.dim(q);
		}
		for (int q = 0; q <= ch.n; ++q)
			REQUIRE(total[q] == G.sub.cx.dim(q));
		REQUIRE_THROWS_AS(fstar_complex(E, random_lifting(ch, rng), SelectorKind::Full), Error);
	}
}

TEST_CASE("koszul strata acyclicity")
{
	std::mt19937_64 rng(53);
	SECTION("zero field: binomial ranks at v = 0, acyclic otherwise")
	{
		Chart ch(3, 2, 1, 1);
		HiggsModule O = HiggsModule::trivial(ch);
		GradedFStar G = fstar_complex(O, LiftingDatum::standard(ch), SelectorKind::Full);
		for (long v = 0; v < 9; ++v)
		{
			ChainComplex S = kv_subcomplex(G, O, decode_residue(v, 3, 2));
			if (v == 0)
			{
				REQUIRE(homology_dim(S, 0) == 1);
				REQUIRE(homology_dim(S, 1) == 2);
				REQUIRE(homology_dim(S, 2) == 1);
			}
			else
				REQUIRE(is_acyclic(S));
		}
	}
	SECTION("nilpotent fields across kinds")
	{
		for (int p : {3, 5})
		{
			Chart ch(p, 2, 2, 1, 1);
			HiggsModule E = random_level1(ch, rng, true);
			for (auto kind : {SelectorKind::Full, SelectorKind::Weight, SelectorKind::Intersection,
			                  SelectorKind::Kontsevich})
			{
				GradedFStar G = fstar_complex(E, LiftingDatum::standard(ch), kind, 1);
				for (long v = 1; v < p * p; ++v)
				{
					ChainComplex S = G.stratum(v);
					REQUIRE(is_acyclic(S));
				}
			}
		}
	}
}

TEST_CASE("local Cartier quasi-isomorphism")
{
	SECTION("structure sheaf, one log coordinate")
	{
		Chart ch(3, 1, 1, 1);
		CartierQis q = local_cartier_qis(HiggsModule::trivial(ch), LiftingDatum::standard(ch),
		                                 SelectorKind::Full);
		REQUIRE(q.chain_map.pass);
		REQUIRE(q.quasi_iso.pass);
		REQUIRE(q.onto_zero_stratum.pass);
		// degree-1 component sends dlog t to dlog t
		REQUIRE(q.map.component(1)(0, 0) == 1);
	}
	SECTION("structure sheaf, one plain coordinate at p=3")
	{
		Chart ch(3, 1, 0, 1);
		CartierQis q = local_cartier_qis(HiggsModule::trivial(ch), LiftingDatum::standard(ch),
		                                 SelectorKind::Full);
		REQUIRE(q.quasi_iso.pass);
		// dt' goes to t^2 dt: the degree-1 image is the monomial t^2 against dt
		auto col = q.map.component(1).col(0);
		int nz = 0, where = -1;
		for (size_t i = 0; i < col.size(); ++i)
			if (col[i])
			{
				++nz;
				where = (int)i;
			}
		REQUIRE(nz == 1);
		REQUIRE(q.target.sub.cx.label_of(1, where) == "m1·t1^2⊗ω{1}");
	}
	SECTION("intersection kind with a nilpotent field")
	{
		std::mt19937_64 rng(59);
		Chart ch(3, 1, 1, 2);
		HiggsModule E = random_level1(ch, rng);
		CartierQis q = local_cartier_qis(E, LiftingDatum::standard(ch), SelectorKind::Intersection);
		REQUIRE(q.chain_map.pass);
		REQUIRE(q.quasi_iso.pass);
		REQUIRE(q.onto_zero_stratum.pass);
	}
}

TEST_CASE("cartier descent rank at zero field")
{
	std::mt19937_64 rng(61);
	for (int p : {2, 3})
		for (int r = 0; r <= 1; ++r)
		{
			Chart ch(p, 1, r, 2);
			for (int rep = 0; rep < 3; ++rep)
			{
				LiftingDatum F = random_lifting(ch, rng);
				HiggsModule O = HiggsModule::trivial(ch, 2);
				ComplexModel M = lambda_complex_model(inverse_cartier_local(O, F));
				// flat sections form a free rank-2 module over the coarse ring
				REQUIRE(homology_dim(M.cx, 0) == 2 * ch.M);
			}
		}
}

TEST_CASE("p-th power consistency of the transform")
{
	std::mt19937_64 rng(67);
	for (int rep = 0; rep < 3; ++rep)
	{
		Chart ch(3, 2, 1, 1);
		HiggsModule E = random_level1(ch, rng);
		LiftingDatum F = random_lifting(ch, rng);
		LambdaConnection H = inverse_cartier_local(E, F);
		ComplexModel M = lambda_complex_model(H);
		ChartModule mod = M.mod;
		for (int i = 0; i < ch.n; ++i)
		{
			FpMatrix op = M.op[i];
			FpMatrix pw = FpMatrix::identity(ch.p, op.rows);
			for (int k = 0; k < ch.p; ++k)
				pw = pw * op;
			FpMatrix pulled = mod.linearize(rmat_frobenius(ch, E.theta[i]));
			// against the twisted frame the p-curvature is -F^* theta_i:
			// op^p - op on a log direction, op^p on a plain one
			FpMatrix expect = ch.is_log(i) ? pw - op + pulled : pw + pulled;
			REQUIRE(expect.is_zero());
		}
	}
}
