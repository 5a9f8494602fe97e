#include "cartierlab/complexes.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace cartierlab;

namespace {

ChainComplex two_term_identity(int p)
{
	ChainComplex C(p, 0, {1, 1});
	C.diff(0)(0, 0) = 1;
	C.validate();
	return C;
}

/// degrees 0..2: F_p ->0-> F_p ->id-> F_p
ChainComplex three_term(int p)
{
	ChainComplex C(p, 0, {1, 1, 1});
	C.diff(1)(0, 0) = 1;
	C.validate();
	return C;
}

ChainComplex permuted(const ChainComplex &C, std::mt19937_64 &rng)
{
	ChainComplex R = C;
	for (int q = C.lo; q <= C.hi; ++q)
	{
		int d = C.dim(q);
		std::vector<int> perm(d);
		for (int i = 0; i < d; ++i)
			perm[i] = i;
		std::shuffle(perm.begin(), perm.end(), rng);
		FpMatrix P(C.p, d, d);
		for (int i = 0; i < d; ++i)
			P(perm[i], i) = 1;
		if (q < C.hi)
			R.diff(q) = R.diff(q) * P.transpose(); // re-index columns
		if (q > C.lo)
			R.diff(q - 1) = P * R.diff(q - 1);
	}
	R.validate();
	return R;
}

} // namespace

TEST_CASE("homology ranks")
{
	SECTION("identity complex is acyclic")
	{
		auto H = homology_ranks(two_term_identity(5));
		REQUIRE(H[0].dim_h == 0);
		REQUIRE(H[1].dim_h == 0);
	}
	SECTION("truncated-ring de Rham complex at p=3, one plain coordinate")
	{
		Chart ch(3, 1, 0, 1);
		LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		auto H = homology_ranks(M.cx);
		REQUIRE(H[0].dim_h == 1);
		REQUIRE(H[1].dim_h == 1);
	}
	SECTION("zero differential on the same chart")
	{
		Chart ch(3, 1, 0, 1);
		LambdaConnection z{ch, 0, 1, {rmat_zero(ch.fine(), 1)}};
		ComplexModel Z = lambda_complex_model(z);
		auto H = homology_ranks(Z.cx);
		REQUIRE(H[0].dim_h == 3);
		REQUIRE(H[1].dim_h == 3);
	}
	SECTION("stable under basis permutation")
	{
		std::mt19937_64 rng(3);
		Chart ch(3, 2, 1, 1);
		LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1), rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		auto H = homology_ranks(M.cx);
		for (int rep = 0; rep < 5; ++rep)
		{
			auto HP = homology_ranks(permuted(M.cx, rng));
			for (size_t i = 0; i < H.size(); ++i)
				REQUIRE(H[i].dim_h == HP[i].dim_h);
		}
	}
}

TEST_CASE("truncation")
{
	SECTION("below the support changes nothing")
	{
		ChainComplex C(5, 0, {2});
		auto T = truncate(C, TruncMode::Below, 1);
		REQUIRE(T.dim(0) == 2);
	}
	SECTION("two-sided window keeps the homology")
	{
		ChainComplex C = three_term(5);
		ChainComplex T = truncate(C, TruncMode::TwoSided, 0, 1);
		REQUIRE(T.lo == 0);
		REQUIRE(T.hi == 1);
		REQUIRE(homology_dim(T, 0) == homology_dim(C, 0));
		REQUIRE(homology_dim(T, 1) == homology_dim(C, 1));
	}
	SECTION("window exclusion kills homology")
	{
		ChainComplex C = three_term(5);
		ChainComplex T = truncate(C, TruncMode::TwoSided, 1, 2);
		REQUIRE(homology_dim(T, 0) == 0);
	}
	SECTION("empty window is an error")
	{
		ChainComplex C = three_term(5);
		REQUIRE_THROWS_AS(truncate(C, TruncMode::TwoSided, 2, 1), Error);
	}
	SECTION("below-q truncation preserves homology in range")
	{
		Chart ch(3, 2, 2, 1);
		LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1), rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		for (int b = 1; b <= 3; ++b)
		{
			ChainComplex T = truncate(M.cx, TruncMode::Below, b);
			for (int q = 0; q < b; ++q)
				REQUIRE(homology_dim(T, q) == homology_dim(M.cx, q));
			for (int q = b; q <= M.cx.hi; ++q)
				REQUIRE(homology_dim(T, q) == 0);
		}
	}
}

TEST_CASE("koszul complexes")
{
	SECTION("a unit operator is acyclic")
	{
		ChainComplex K = koszul(5, 1, {FpMatrix::identity(5, 1)});
		REQUIRE(is_acyclic(K));
	}
	SECTION("unit plus nilpotent is acyclic")
	{
		FpMatrix Nil(5, 2, 2);
		Nil(0, 1) = 1;
		FpMatrix op = FpMatrix::identity(5, 2).scale(2) + Nil;
		ChainComplex K = koszul(5, 2, {op, Nil});
		REQUIRE(is_acyclic(K));
	}
	SECTION("zero operators give binomial ranks")
	{
		ChainComplex K = koszul(3, 1, {FpMatrix(3, 1, 1), FpMatrix(3, 1, 1)});
		REQUIRE(homology_dim(K, 0) == 1);
		REQUIRE(homology_dim(K, 1) == 2);
		REQUIRE(homology_dim(K, 2) == 1);
	}
	SECTION("non-commuting operators are rejected")
	{
		FpMatrix A(5, 2, 2), B(5, 2, 2);
		A(0, 1) = 1;
		B(1, 0) = 1;
		REQUIRE_THROWS_AS(koszul(5, 2, {A, B}), Error);
	}
}

TEST_CASE("certification")
{
	SECTION("identity is a quasi-isomorphism")
	{
		ChainComplex C = three_term(3);
		REQUIRE(certify_quasi_iso(ChainMap::identity(C)).pass);
	}
	SECTION("zero map between acyclic complexes is a quasi-isomorphism")
	{
		ChainComplex C = two_term_identity(3);
		ChainMap z(C, C, 0);
		REQUIRE(certify_quasi_iso(z).pass);
	}
	SECTION("zero map out of a non-acyclic complex fails")
	{
		Chart ch(3, 1, 0, 1);
		LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		ChainMap z(M.cx, M.cx, 0);
		Verdict v = certify_quasi_iso(z);
		REQUIRE_FALSE(v.pass);
	}
	SECTION("non-chain-map is rejected with the failing degree")
	{
		ChainComplex C = three_term(3);
		ChainMap f = ChainMap::identity(C);
		f.component(1)(0, 0) = 2;
		Verdict v = certify_chain_map(f);
		REQUIRE_FALSE(v.pass);
		REQUIRE(v.witness_degree == 1);
	}
	SECTION("homotopy certificates")
	{
		ChainComplex C = two_term_identity(3);
		ChainMap f = ChainMap::identity(C), g = ChainMap::identity(C);
		ChainMap h(C, C, -1);
		REQUIRE(certify_homotopic(f, g, h).pass);
		ChainMap h2(C, C, -1);
		h2.component(1)(0, 0) = 1;
		REQUIRE(certify_null_homotopic(f, h2).pass);
	}
	SECTION("cone and induced-map oracles agree on scaled identities")
	{
		Chart ch(3, 1, 1, 1);
		LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1)}};
		ComplexModel M = lambda_complex_model(d0);
		for (int c = 0; c < 3; ++c)
		{
			ChainMap f = ChainMap::identity(M.cx).scale(c);
			REQUIRE_NOTHROW(certify_quasi_iso(f)); // throws iff the oracles disagree
		}
	}
}

TEST_CASE("restriction of maps to truncations")
{
	Chart ch(3, 1, 0, 1);
	LambdaConnection d0{ch, 1, 1, {rmat_zero(ch.fine(), 1)}};
	ComplexModel M = lambda_complex_model(d0);
	ChainMap f = ChainMap::identity(M.cx).scale(2);
	ChainMap g = restrict_below(f, 1);
	REQUIRE(g.src.hi == 0);
	REQUIRE(certify_chain_map(g).pass);
}
