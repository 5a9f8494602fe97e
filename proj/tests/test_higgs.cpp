#include "cartierlab/cartier.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace cartierlab;

namespace {

RMat upper_shift(Ring rg, int m, int power = 1)
{
	RMat J = rmat_zero(rg, m);
	for (int i = 0; i + 1 < m; ++i)
		J[i][i + 1] = RingElement::one(rg);
	RMat a = rmat_identity(rg, m);
	for (int k = 0; k < power; ++k)
		a = rmat_mul(a, J);
	return a;
}

bool same_span(int p, const FpMatrix &A, const FpMatrix &B)
{
	Span sa(p, A.rows), sb(p, B.rows);
	for (int j = 0; j < A.cols; ++j)
		sa.insert(A.col(j));
	for (int j = 0; j < B.cols; ++j)
		sb.insert(B.col(j));
	if (sa.rank() != sb.rank())
		return false;
	for (int j = 0; j < B.cols; ++j)
		if (!sa.contains(B.col(j)))
			return false;
	return true;
}

RingElement random_coarse(const Chart &ch, std::mt19937_64 &rng, int terms)
{
	RingElement f(ch.coarse());
	for (int t = 0; t < terms; ++t)
	{
		ExpVec e(ch.n);
		for (int i = 0; i < ch.n; ++i)
			e[i] = (uint8_t)(rng() % ch.M);
		f.add_term(e, (int)(rng() % ch.p));
	}
	return f;
}

} // namespace

TEST_CASE("nilpotency level")
{
	Chart ch(5, 2, 1, 1);
	SECTION("zero field")
	{
		REQUIRE(nilpotency_level(HiggsModule::trivial(ch, 2)) == 0);
	}
	SECTION("strictly upper triangular square vanishes")
	{
		std::vector<RMat> th{upper_shift(ch.coarse(), 2), rmat_zero(ch.coarse(), 2)};
		REQUIRE(nilpotency_level(HiggsModule(ch, 2, th)) == 1);
	}
	SECTION("jordan block and its square")
	{
		std::vector<RMat> th{upper_shift(ch.coarse(), 3, 1), upper_shift(ch.coarse(), 3, 2)};
		REQUIRE(nilpotency_level(HiggsModule(ch, 3, th)) == 2);
	}
	SECTION("a unit component is not nilpotent")
	{
		std::vector<RMat> th{rmat_identity(ch.coarse(), 2), rmat_zero(ch.coarse(), 2)};
		REQUIRE(nilpotency_level(HiggsModule(ch, 2, th)) == -1);
	}
	SECTION("non-commuting components are rejected at construction")
	{
		RMat A = rmat_zero(ch.coarse(), 2), B = rmat_zero(ch.coarse(), 2);
		A[0][1] = RingElement::one(ch.coarse());
		B[1][0] = RingElement::one(ch.coarse());
		REQUIRE_THROWS_WITH(HiggsModule(ch, 2, {A, B}), Catch::Matchers::ContainsSubstring("integrability"));
	}
}

TEST_CASE("exact twists")
{
	Chart ch(3, 2, 1, 1); // t1 log, t2 plain
	HiggsModule O = HiggsModule::trivial(ch);
	SECTION("f = 0 changes nothing")
	{
		HiggsModule T = twist_exact(O, RingElement::zero(ch.coarse()), -1);
		REQUIRE(rmat_is_zero(T.theta[0]));
		REQUIRE(rmat_is_zero(T.theta[1]));
	}
	SECTION("component shift against a plain coordinate")
	{
		Chart ch2(3, 2, 1, 2);
		HiggsModule O2 = HiggsModule::trivial(ch2);
		HiggsModule T = twist_exact(O2, RingElement::variable(ch2.coarse(), 1), -1);
		REQUIRE(rmat_is_zero(T.theta[0]));
		REQUIRE(T.theta[1][0][0] == RingElement::constant(ch2.coarse(), -1));
	}
	SECTION("involution")
	{
		std::mt19937_64 rng(5);
		for (int rep = 0; rep < 10; ++rep)
		{
			RingElement f = random_coarse(ch, rng, 4);
			HiggsModule T = twist_exact(twist_exact(O, f, -1), f, +1);
			REQUIRE(rmat_is_zero(T.theta[0]));
			REQUIRE(rmat_is_zero(T.theta[1]));
		}
	}
}

TEST_CASE("lambda complexes square to zero")
{
	// construction validates the curvature on the full monomial basis
	std::mt19937_64 rng(9);
	for (int p : {2, 3, 5})
	{
		Chart ch(p, 2, 1, 1);
		RMat t0 = rmat_zero(ch.coarse(), 2), t1 = rmat_zero(ch.coarse(), 2);
		t0[0][1] = random_coarse(ch, rng, 2);
		t1[0][1] = random_coarse(ch, rng, 2);
		HiggsModule E(ch, 2, {t0, t1});
		REQUIRE_NOTHROW(higgs_complex_model(E));
		REQUIRE_NOTHROW(lambda_complex_model(inverse_cartier_local(E, LiftingDatum::standard(ch))));
	}
}

TEST_CASE("subcomplex generators")
{
	SECTION("weight zero on a fully log surface")
	{
		Chart ch(3, 2, 2, 1);
		ComplexModel M = higgs_complex_model(HiggsModule::trivial(ch));
		auto gens = subcomplex_generators(M, SelectorKind::Weight, 0);
		std::vector<std::string> deg1;
		for (auto &g : gens)
			if (g.degree == 1)
				deg1.push_back(g.label);
		REQUIRE(deg1.size() == 2);
		REQUIRE_THAT(deg1[0], Catch::Matchers::ContainsSubstring("t{1}⊗ω{1}"));
		REQUIRE_THAT(deg1[1], Catch::Matchers::ContainsSubstring("t{2}⊗ω{2}"));
	}
	SECTION("intersection span on one log coordinate with zero field")
	{
		Chart ch(3, 1, 1, 2);
		ComplexModel M = higgs_complex_model(HiggsModule::trivial(ch));
		Subcomplex sub = selector_subcomplex(M, SelectorKind::Intersection);
		REQUIRE(sub.cx.dim(0) == 2);  // no condition in degree 0, dim = M
		REQUIRE(sub.cx.dim(1) == 1);  // monomials divisible by t1
	}
	SECTION("kontsevich generators in degree one")
	{
		Chart ch(3, 2, 2, 1, 2);
		ComplexModel M = higgs_complex_model(HiggsModule::trivial(ch));
		auto gens = subcomplex_generators(M, SelectorKind::Kontsevich);
		int deg1 = 0;
		for (auto &g : gens)
			if (g.degree == 1)
				++deg1;
		// dlog g plus g·dlog t1 and g·dlog t2 (the latter vanish at M=1)
		REQUIRE(deg1 == 1);
		Chart ch2(3, 2, 2, 2, 2);
		ComplexModel M2 = higgs_complex_model(HiggsModule::trivial(ch2));
		auto gens2 = subcomplex_generators(M2, SelectorKind::Kontsevich);
		int deg1b = 0;
		for (auto &g : gens2)
			if (g.degree == 1)
				++deg1b;
		REQUIRE(deg1b == 3);
	}
	SECTION("missing s is an error")
	{
		Chart ch(3, 2, 2, 1);
		ComplexModel M = higgs_complex_model(HiggsModule::trivial(ch));
		REQUIRE_THROWS_AS(selector_subcomplex(M, SelectorKind::Kontsevich), Error);
	}
}

TEST_CASE("generator spans are ring submodules")
{
	std::mt19937_64 rng(13);
	Chart ch(3, 2, 2, 2, 1);
	RMat t0 = rmat_zero(ch.coarse(), 2), t1 = rmat_zero(ch.coarse(), 2);
	t0[0][1] = random_coarse(ch, rng, 2).mul_var(0); // pole-free
	t1[0][1] = random_coarse(ch, rng, 2).mul_var(1);
	HiggsModule E(ch, 2, {t0, t1});
	ComplexModel M = higgs_complex_model(E);
	for (auto kind : {SelectorKind::Weight, SelectorKind::Intersection, SelectorKind::Kontsevich})
	{
		Subcomplex sub = selector_subcomplex(M, kind, 1);
		auto gens = subcomplex_generators(M, kind, 1);
		for (auto &g : gens)
		{
			REQUIRE(sub.contains(g.degree, g.vec));
			for (int i = 0; i < ch.n; ++i)
			{
				FpMatrix mul = M.mod.mul_op(RingElement::variable(M.mod.ring, i));
				std::vector<uint8_t> w(g.vec.size(), 0);
				long md = M.mod.fp_dim();
				for (size_t blk = 0; blk * md < g.vec.size(); ++blk)
				{
					std::vector<uint8_t> piece(g.vec.begin() + blk * md, g.vec.begin() + (blk + 1) * md);
					auto img = mul.apply(piece);
					std::copy(img.begin(), img.end(), w.begin() + blk * md);
				}
				REQUIRE(sub.contains(g.degree, w));
			}
		}
	}
}

TEST_CASE("kontsevich generators closed under the differential")
{
	Chart ch(3, 2, 2, 1, 2);
	for (int lambda : {0, 1})
	{
		LambdaConnection d0{ch, lambda, 1, {rmat_zero(ch.fine(), 1), rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		Subcomplex sub = selector_subcomplex(M, SelectorKind::Kontsevich);
		auto gens = subcomplex_generators(M, SelectorKind::Kontsevich);
		for (auto &g : gens)
		{
			if (g.degree >= ch.n)
				continue;
			auto dv = M.cx.diff(g.degree).apply(g.vec);
			REQUIRE(sub.contains(g.degree + 1, dv));
		}
	}
}

TEST_CASE("hodge pairs")
{
	Chart ch(3, 2, 2, 1, 2);
	SECTION("type I with the zero field")
	{
		HodgePair pair = build_hodge_pair(HodgePair::Type::I, HiggsModule::trivial(ch),
		                                  LiftingDatum::standard(ch));
		PairComplexes pc = realize_pair(pair);
		REQUIRE(pc.higgs.cx.dim(1) == 2);      // coarse model, M=1
		REQUIRE(pc.derham.cx.dim(1) == 2 * 9); // fine model
	}
	SECTION("type III with enough truncation room")
	{
		Chart ch2(3, 2, 2, 2, 2);
		HodgePair pair = build_hodge_pair(HodgePair::Type::III, HiggsModule::trivial(ch2),
		                                  LiftingDatum::standard(ch2));
		PairComplexes pc = realize_pair(pair);
		// dlog g times 4 coarse monomials, plus the single surviving g-multiple
		REQUIRE(pc.higgs.cx.dim(1) == 4 + 1);
	}
	SECTION("weight pair rejects a field with a pole")
	{
		RMat t0 = rmat_zero(ch.coarse(), 2), t1 = rmat_zero(ch.coarse(), 2);
		t0[0][1] = RingElement::one(ch.coarse());
		HiggsModule E(ch, 2, {t0, t1});
		REQUIRE_THROWS_WITH(build_hodge_pair(HodgePair::Type::IWeight, E, LiftingDatum::standard(ch), 0),
		                    Catch::Matchers::ContainsSubstring("pole violation"));
	}
	SECTION("composite pair needs a zero field")
	{
		Chart ch2(3, 2, 2, 2, 2);
		RMat t0 = rmat_zero(ch2.coarse(), 2), t1 = rmat_zero(ch2.coarse(), 2);
		t0[0][1] = RingElement::variable(ch2.coarse(), 0);
		HiggsModule E(ch2, 2, {t0, t1});
		REQUIRE_THROWS_AS(build_hodge_pair(HodgePair::Type::IV, E, LiftingDatum::standard(ch2)), Error);
	}
}

TEST_CASE("exponential twisting preserves the selector spans")
{
	// span equality of the distinguished subspaces computed before and after
	// the exact twist, on both sides of the pair
	std::mt19937_64 rng(31);
	Chart ch(5, 2, 2, 1, 1);
	for (int rep = 0; rep < 3; ++rep)
	{
		RMat t0 = rmat_zero(ch.coarse(), 2), t1 = rmat_zero(ch.coarse(), 2);
		t0[0][1] = random_coarse(ch, rng, 2).mul_var(0);
		t1[0][1] = random_coarse(ch, rng, 2).mul_var(1);
		HiggsModule E(ch, 2, {t0, t1});
		LambdaConnection H = inverse_cartier_local(E, LiftingDatum::standard(ch));
		RingElement f(ch.fine());
		for (int t = 0; t < 3; ++t)
		{
			ExpVec e(ch.n);
			for (int i = 0; i < ch.n; ++i)
				e[i] = (uint8_t)(rng() % ch.fine().cap);
			f.add_term(e, (int)(rng() % ch.p));
		}
		HiggsModule Et = twist_exact(E, coarsen(ch, f), -1);
		LambdaConnection Ht = twist_exact(H, f, +1);
		ComplexModel ME = higgs_complex_model(E), MEt = higgs_complex_model(Et);
		ComplexModel MH = lambda_complex_model(H), MHt = lambda_complex_model(Ht);
		for (auto kind : {SelectorKind::Weight, SelectorKind::Intersection, SelectorKind::Kontsevich})
		{
			int widx = 1;
			Subcomplex a = selector_subcomplex(ME, kind, widx);
			Subcomplex b = selector_subcomplex(MEt, kind, widx);
			Subcomplex c = selector_subcomplex(MH, kind, widx);
			Subcomplex d = selector_subcomplex(MHt, kind, widx);
			for (int q = 0; q <= ch.n; ++q)
			{
				REQUIRE(same_span(ch.p, a.basis[q], b.basis[q]));
				REQUIRE(same_span(ch.p, c.basis[q], d.basis[q]));
			}
		}
	}
}
