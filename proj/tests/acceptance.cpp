// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Every tolerance is exact equality over F_p; the stated time budgets are
// enforced.

#include "cartierlab/gen.hpp"
#include "cartierlab/runner.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

using namespace cartierlab;

namespace {

int failures = 0;

struct Criterion
{
	std::string name;
	double budget_s;
	std::chrono::steady_clock::time_point start;
	bool ok = true;
	std::string detail;

	Criterion(std::string n, double budget) : name(std::move(n)), budget_s(budget)
	{
		start = std::chrono::steady_clock::now();
	}
	void fail(const std::string &d)
	{
		if (ok)
			detail = d;
		ok = false;
	}
	void finish()
	{
		double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
		if (budget_s > 0 && secs > budget_s)
			fail("time budget exceeded: " + std::to_string(secs) + " s");
		std::cout << (ok ? "PASS" : "FAIL") << " " << name;
		if (!ok)
			std::cout << " -- " << detail;
		printf(" (%.2f s)\n", secs);
		fflush(stdout);
		if (!ok)
			++failures;
	}
};

RMat shift_matrix(Ring rg, int m, int power, const RingElement &c)
{
	RMat A = rmat_zero(rg, m);
	for (int row = 0; row + power < m; ++row)
		A[row][row + power] = c;
	return A;
}

HiggsModule random_nilpotent_module(const Chart &ch, std::mt19937_64 &rng, int rank, int level_budget,
                                    bool pole_free)
{
	std::vector<RMat> th;
	for (int i = 0; i < ch.n; ++i)
	{
		int kpow = 1 + (int)(rng() % std::max(1, level_budget));
		RingElement c = random_poly(ch.coarse(), rng, 2, false);
		if (pole_free && ch.is_log(i))
			c = c.mul_var(i);
		th.push_back(shift_matrix(ch.coarse(), rank, kpow, c));
	}
	return HiggsModule(ch, rank, th);
}

LiftingFamily random_family(const Chart &ch, std::mt19937_64 &rng, int count, bool fix_g = false)
{
	LiftingFamily fam;
	fam.chart = ch;
	for (int a = 0; a < count; ++a)
	{
		std::vector<RingElement> wg;
		for (int i = 0; i < ch.n; ++i)
			wg.push_back(a == 0 ? RingElement::zero(ch.fine()) : random_poly(ch.fine(), rng, 2, false));
		if (fix_g && ch.s >= 1 && a > 0)
		{
			RingElement sum(ch.fine());
			for (int i = 0; i + 1 < ch.s; ++i)
				sum = sum + wg[i];
			wg[ch.s - 1] = -sum;
		}
		fam.members.emplace_back(ch, wg);
	}
	return fam;
}

long binom(int n, int k)
{
	if (k < 0 || k > n)
		return 0;
	long r = 1;
	for (int i = 0; i < k; ++i)
		r = r * (n - i) / (i + 1);
	return r;
}

// ---------------------------------------------------------------------------

void criterion_classical_cartier()
{
	Criterion c("1 classical-cartier", 5.0);
	for (int p : {2, 3, 5})
		for (int n : {1, 2})
			for (int r = 0; r <= n; ++r)
				for (int M : {1, 2})
				{
					Chart ch(p, n, r, M);
					HiggsModule O = HiggsModule::trivial(ch);
					CartierQis q = local_cartier_qis(O, LiftingDatum::standard(ch), SelectorKind::Full);
					if (!q.chain_map.pass || !q.quasi_iso.pass || !q.onto_zero_stratum.pass)
					{
						c.fail("certificate failed at p=" + std::to_string(p) + " n=" + std::to_string(n) +
						       " r=" + std::to_string(r) + " M=" + std::to_string(M));
						continue;
					}
					// pushforward homology matches the coarse-side model sizes
					long coarse = 1;
					for (int i = 0; i < n; ++i)
						coarse *= M;
					for (int deg = 0; deg <= n; ++deg)
					{
						int h = homology_dim(q.target.sub.cx, deg);
						if (h != coarse * binom(n, deg))
							c.fail("homology dimension mismatch in degree " + std::to_string(deg));
					}
				}
	c.finish();
}

void criterion_kv_acyclicity()
{
	Criterion c("2 koszul-stratum-acyclicity", 30.0);
	std::mt19937_64 rng(2024);
	auto run = [&](const HiggsModule &E, SelectorKind kind, int widx) {
		GradedFStar G = fstar_complex(E, LiftingDatum::standard(E.chart), kind, widx);
		long total = 1;
		for (int i = 0; i < E.chart.n; ++i)
			total *= E.chart.p;
		for (long v = 1; v < total; ++v)
		{
			ChainComplex S = (kind == SelectorKind::Full)
			                     ? kv_subcomplex(G, E, decode_residue(v, E.chart.p, E.chart.n))
			                     : G.stratum(v);
			if (!is_acyclic(S))
			{
				c.fail("nonzero stratum has homology, p=" + std::to_string(E.chart.p));
				return;
			}
		}
	};
	// the zero-field grid
	for (int p : {2, 3, 5})
		for (int n : {1, 2})
			for (int r = 0; r <= n; ++r)
				for (int M : {1, 2})
					run(HiggsModule::trivial(Chart(p, n, r, M)), SelectorKind::Full, 0);
	// twenty random nilpotent modules across the grid
	for (int k = 0; k < 20; ++k)
	{
		int p = (k % 2 == 0) ? 3 : 5;
		int n = 1 + (int)(rng() % 2);
		int r = (int)(rng() % (n + 1));
		int M = 1 + (int)(rng() % 2);
		Chart ch(p, n, r, M);
		int rank = 2 + (int)(rng() % 2);
		int budget = std::min(p - 2, rank - 1);
		HiggsModule E = random_nilpotent_module(ch, rng, rank, std::max(1, budget), false);
		run(E, SelectorKind::Full, 0);
	}
	// selector variants on a spot grid
	for (int p : {3, 5})
	{
		Chart ch(p, 2, 2, 1, 1);
		HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, true);
		for (auto kind : {SelectorKind::Weight, SelectorKind::Intersection, SelectorKind::Kontsevich})
			run(E, kind, 1);
	}
	c.finish();
}

void criterion_twisted_composite()
{
	Criterion c("3 twisted-composite-quasi-isomorphism", 60.0);
	std::mt19937_64 rng(3030);
	for (int p : {3, 5})
		for (int k = 0; k < 10; ++k)
		{
			Chart ch(p, 2, 2, 1, 1);
			HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, true);
			RingElement f = random_poly(ch.fine(), rng, 3, true);
			for (auto [kind, widx] :
			     {std::pair{SelectorKind::Full, 0}, {SelectorKind::Intersection, 0},
			      {SelectorKind::Kontsevich, 0}, {SelectorKind::Weight, 1}})
			{
				try
				{
					TwistedCartierQis q = twisted_cartier_qis(E, f, LiftingDatum::standard(ch), kind, widx);
					if (!q.chain_map.pass || !q.quasi_iso.pass)
						c.fail("certificate failed, p=" + std::to_string(p) + " k=" + std::to_string(k) +
						       " kind=" + selector_name(kind, widx));
				}
				catch (const Error &e)
				{
					c.fail(std::string("exception: ") + e.what());
				}
			}
		}
	c.finish();
}

void criterion_artin_hasse()
{
	Criterion c("4 artin-hasse-identities", 5.0);
	std::mt19937_64 rng(4040);
	for (int p : {2, 3, 5})
	{
		Chart ch(p, 2, 1, 2);
		for (int k = 0; k < 100; ++k)
		{
			RingElement f = random_poly(ch.fine(), rng, 5, true);
			try
			{
				ArtinHasseUnit ah = artin_hasse(ch, f);
				if (!artin_hasse_identity(ch, ah))
					c.fail("dG != G u at p=" + std::to_string(p));
			}
			catch (const Error &e)
			{
				c.fail(std::string("integrality: ") + e.what());
			}
		}
	}
	// low-degree expansion at p = 2
	{
		Chart ch(2, 1, 0, 3);
		ArtinHasseUnit ah = artin_hasse(ch, RingElement::variable(ch.fine(), 0));
		int expect[5] = {1, 1, 1, 0, 0};
		for (int d = 0; d <= 4; ++d)
		{
			auto it = ah.G.c.find(ExpVec{(uint8_t)d});
			int got = it == ah.G.c.end() ? 0 : it->second;
			if (got != expect[d])
				c.fail("p=2 expansion coefficient mismatch at degree " + std::to_string(d));
		}
	}
	c.finish();
}

struct CorpusInstance
{
	HiggsModule E;
	LiftingFamily fam;
	std::vector<int> D;
	FpMatrix P;
	int trunc = -1; // tau window for the truncated regime, -1 untruncated
};

std::vector<CorpusInstance> identity_corpus()
{
	std::vector<CorpusInstance> out;
	std::mt19937_64 rng(5050);
	// untruncated regime: p = 5, level 1, block ranks < p - 1
	for (int k = 0; k < 18; ++k)
	{
		Chart ch(5, 2, k % 3 == 0 ? 0 : 1, 1);
		CorpusInstance ci{random_nilpotent_module(ch, rng, 2, 1, false),
		                  random_family(ch, rng, 2), {1, 2}, FpMatrix::identity(5, 2), -1};
		if (k % 3 == 1)
			ci.D = {1, 1};
		out.push_back(std::move(ci));
	}
	// three liftings on a threefold for the deeper components
	for (int k = 0; k < 12; ++k)
	{
		Chart ch(5, 3, k % 2, 1);
		CorpusInstance ci{random_nilpotent_module(ch, rng, 2, 1, false),
		                  random_family(ch, rng, 3), {1, 2, 3}, FpMatrix::identity(5, 3), -1};
		if (k % 3 == 1)
			ci.D = {1, 1, 2};
		if (k % 3 == 2)
			ci.D = {1, 2, 2};
		out.push_back(std::move(ci));
	}
	// truncated regime: blockwise rank >= p - level
	for (int k = 0; k < 12; ++k)
	{
		Chart ch(3, 2, k % 3 == 0 ? 2 : 1, 1);
		CorpusInstance ci{random_nilpotent_module(ch, rng, 2, 1, false),
		                  random_family(ch, rng, 2), {1, 1}, FpMatrix::identity(3, 2), 2};
		out.push_back(std::move(ci));
	}
	for (int k = 0; k < 8; ++k)
	{
		Chart ch(3, 3, 1, 1);
		CorpusInstance ci{HiggsModule::trivial(ch, 2), random_family(ch, rng, 3),
		                  {1, 1, 1}, FpMatrix::identity(3, 3), 3};
		// level 0 with a rank-3 block: window below p - 0 = 3
		out.push_back(std::move(ci));
	}
	return out;
}

void criterion_infty_homotopy(const std::vector<CorpusInstance> &corpus)
{
	Criterion c("5 infty-homotopy-relation", 120.0);
	if (corpus.size() < 50)
		c.fail("corpus too small: " + std::to_string(corpus.size()));
	int idx = 0;
	for (auto &ci : corpus)
	{
		PhiEngine eng = make_engine(ci.E, ci.fam, ci.P);
		auto tuples = increasing_tuples((int)ci.fam.size(), (int)ci.fam.size() - 1);
		for (int r = 1; r < (int)tuples.size(); ++r)
			for (auto &tuple : tuples[r])
			{
				IdentityCheck chk = verify_infty_homotopy(eng, tuple, ci.D, ci.trunc);
				if (!chk.pass)
					c.fail("instance " + std::to_string(idx) + " r=" + std::to_string(r) + " " +
					       chk.witness);
			}
		++idx;
	}
	c.finish();
}

void criterion_base_free(const std::vector<CorpusInstance> &corpus)
{
	Criterion c("6 base-free-lift", 0.0);
	std::mt19937_64 rng(6060);
	int idx = 0;
	for (auto &ci : corpus)
	{
		if (ci.trunc >= 0)
		{
			++idx;
			continue; // the lift is only defined below the blockwise bound
		}
		PhiEngine eng = make_engine(ci.E, ci.fam, ci.P);
		auto tuples = increasing_tuples((int)ci.fam.size(), (int)ci.fam.size() - 1);
		const Chart &ch = ci.E.chart;
		// one random block-respecting change of basis
		OrderedSplitting sp(ch, ci.D, ci.P);
		FpMatrix B = FpMatrix::identity(ch.p, ch.n);
		for (int b = 1; b <= sp.beta; ++b)
		{
			auto mem = sp.block_members(b);
			for (size_t i = 0; i < mem.size(); ++i)
			{
				B(mem[i], mem[i]) = (uint8_t)(1 + rng() % (ch.p - 1));
				for (size_t j = i + 1; j < mem.size(); ++j)
					B(mem[i], mem[j]) = (uint8_t)(rng() % ch.p);
			}
		}
		PhiEngine eng2 = make_engine(ci.E, ci.fam, ci.P * B);
		for (int r = 1; r < (int)tuples.size(); ++r)
			for (auto &tuple : tuples[r])
				for (int s = 0; s + r <= ch.n; ++s)
				{
					FpMatrix a = phi_component(eng, tuple, ci.D, s);
					if (!(a == phi_tilde_sec_component(eng, tuple, ci.D, s)))
						c.fail("lift mismatch, instance " + std::to_string(idx));
					if (!(a == phi_component(eng2, tuple, ci.D, s)))
						c.fail("basis dependence, instance " + std::to_string(idx));
				}
		++idx;
	}
	c.finish();
}

void criterion_splitting_homotopy(const std::vector<CorpusInstance> &corpus)
{
	Criterion c("7 splitting-comparison-and-two-term", 120.0);
	int idx = 0;
	for (auto &ci : corpus)
	{
		++idx;
		if (ci.trunc >= 0)
			continue; // merged-rank bound must hold untruncated
		int beta = *std::max_element(ci.D.begin(), ci.D.end());
		if (beta < 2)
			continue;
		const Chart &ch = ci.E.chart;
		int level = nilpotency_level(ci.E);
		PhiEngine eng = make_engine(ci.E, ci.fam, ci.P);
		auto tuples = increasing_tuples((int)ci.fam.size(), (int)ci.fam.size() - 1);
		for (int o = 1; o < beta; ++o)
		{
			// merged block rank must stay below p - level
			OrderedSplitting sp(ch, ci.D, ci.P);
			if (sp.rank_of_block(o) + sp.rank_of_block(o + 1) >= ch.p - level)
				continue;
			for (int r = 1; r < (int)tuples.size(); ++r)
				for (auto &tuple : tuples[r])
				{
					IdentityCheck chk = verify_splitting_homotopy(eng, tuple, ci.D, o);
					if (!chk.pass)
						c.fail("identity failed, instance " + std::to_string(idx - 1) + " o=" +
						       std::to_string(o) + " " + chk.witness);
				}
		}
	}
	// the induced two-term windows coincide along merge chains
	std::mt19937_64 rng(7070);
	for (int rep = 0; rep < 2; ++rep)
	{
		Chart ch(5, 2, 0, 1);
		HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, false);
		LiftingFamily fam = random_family(ch, rng, 2);
		FpMatrix P2 = FpMatrix::identity(5, 2);
		P2(0, 1) = 1;
		std::vector<OrderedSplitting> chain{OrderedSplitting(ch, {1, 2}),
		                                    OrderedSplitting(ch, {1, 1}),
		                                    OrderedSplitting(ch, {1, 1}, P2),
		                                    OrderedSplitting(ch, {1, 2}, P2)};
		for (int a : {0, 1})
		{
			TwoTermReport rep2 = verify_two_term(E, fam, chain, SelectorKind::Full, 0, a);
			if (!rep2.pass)
				c.fail("two-term window a=" + std::to_string(a) + ": " + rep2.detail);
		}
	}
	c.finish();
}

void criterion_subcomplex_compat()
{
	Criterion c("8 selector-compatibility", 0.0);
	std::mt19937_64 rng(8080);
	for (int p : {3, 5})
	{
		Chart ch(p, 2, 2, 1, 2);
		// weight and intersection pairs with a divisor-compatible splitting
		{
			HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, true);
			LiftingFamily fam = random_family(ch, rng, 2);
			PhiEngine eng = make_engine(E, fam, FpMatrix::identity(p, 2));
			OrderedSplitting sp(ch, {1, 2});
			for (auto [kind, widx] : {std::pair{SelectorKind::Weight, 1}, {SelectorKind::Intersection, 0}})
			{
				IdentityCheck chk = verify_subcomplex_compat(eng, sp, kind, widx, true);
				if (!chk.pass)
					c.fail(selector_name(kind, widx) + " membership failed at p=" + std::to_string(p) +
					       ": " + chk.witness);
			}
		}
		// adapted pairs over a family fixing g
		{
			HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, true);
			LiftingFamily fam = random_family(ch, rng, 2, true);
			PhiEngine eng = make_engine(E, fam, FpMatrix::identity(p, 2));
			OrderedSplitting sp = OrderedSplitting::trivial(ch);
			IdentityCheck chk = verify_subcomplex_compat(eng, sp, SelectorKind::Kontsevich, 0, true);
			if (!chk.pass)
				c.fail("adapted membership failed at p=" + std::to_string(p) + ": " + chk.witness);
		}
		// composite pairs: certify the fiber transform, then the membership
		{
			HodgePair pair = build_hodge_pair(HodgePair::Type::IV, HiggsModule::trivial(ch),
			                                  LiftingDatum::standard(ch), 0, 0, false);
			RingElement g = RingElement::monomial(ch.fine(), ExpVec{1, 1});
			FormalGTransform tr = formal_g_transform(pair, g, 0);
			for (int k = 0; k < 4; ++k)
				if (!tr.isos[k].pass)
					c.fail("fiber transform isomorphism " + std::to_string(k + 1) + " failed");
			LiftingFamily fam = random_family(ch, rng, 2, true);
			PhiEngine eng = make_engine(HiggsModule::trivial(ch), fam, FpMatrix::identity(p, 2));
			OrderedSplitting sp = OrderedSplitting::trivial(ch);
			IdentityCheck chk = verify_subcomplex_compat(eng, sp, SelectorKind::Kontsevich, 0, true);
			if (!chk.pass)
				c.fail("composite membership failed at p=" + std::to_string(p));
		}
	}
	c.finish();
}

void criterion_kunneth()
{
	Criterion c("9 product-factorization", 30.0);
	std::mt19937_64 rng(9090);
	for (int p : {3, 5})
		for (int r1 : {0, 1})
			for (int r2 : {0, 1})
			{
				Chart c1(p, 1, r1, 1), c2(p, 1, r2, 1);
				LiftingFamily f1 = random_family(c1, rng, 2), f2 = random_family(c2, rng, 2);
				KunnethResult res = kunneth_verify(HiggsModule::trivial(c1), f1,
				                                   HiggsModule::trivial(c2), f2);
				if (!res.pass)
					c.fail("trivial factors, p=" + std::to_string(p) + ": " + res.detail);
			}
	for (int p : {3, 5})
	{
		Chart c1(p, 1, 1, 1), c2(p, 1, 0, 1);
		HiggsModule E1 = random_nilpotent_module(c1, rng, 2, 1, false);
		LiftingFamily f1 = random_family(c1, rng, 2), f2 = random_family(c2, rng, 2);
		KunnethResult res = kunneth_verify(E1, f1, HiggsModule::trivial(c2), f2);
		if (!res.pass)
			c.fail("nontrivial factor, p=" + std::to_string(p) + ": " + res.detail);
	}
	c.finish();
}

void criterion_twist_table()
{
	Criterion c("10 exponential-twist-table", 0.0);
	std::mt19937_64 rng(1010);
	for (int k = 0; k < 10; ++k)
	{
		int p = (k % 2) ? 5 : 3;
		Chart ch(p, 2, 2, 1, 1);
		HiggsModule E = random_nilpotent_module(ch, rng, 2, 1, true);
		LambdaConnection H = inverse_cartier_local(E, LiftingDatum::standard(ch));
		RingElement f = random_poly(ch.fine(), rng, 3, false);
		HiggsModule Et = twist_exact(E, coarsen(ch, f), -1);
		LambdaConnection Ht = twist_exact(H, f, +1);
		ComplexModel ME = higgs_complex_model(E), MEt = higgs_complex_model(Et);
		ComplexModel MH = lambda_complex_model(H), MHt = lambda_complex_model(Ht);
		auto same_span = [&](const FpMatrix &A, const FpMatrix &B) {
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
		};
		for (auto [kind, widx] : {std::pair{SelectorKind::Weight, 1}, {SelectorKind::Intersection, 0},
		                          {SelectorKind::Kontsevich, 0}})
		{
			Subcomplex a = selector_subcomplex(ME, kind, widx);
			Subcomplex b = selector_subcomplex(MEt, kind, widx);
			Subcomplex cc = selector_subcomplex(MH, kind, widx);
			Subcomplex d = selector_subcomplex(MHt, kind, widx);
			for (int q = 0; q <= ch.n; ++q)
				if (!same_span(a.basis[q], b.basis[q]) || !same_span(cc.basis[q], d.basis[q]))
					c.fail(selector_name(kind, widx) + " span equality failed, instance " +
					       std::to_string(k));
		}
		// the four composite-pair isomorphisms along the central fiber
		Chart chIV(p, 2, 2, 1, 2);
		HodgePair pair = build_hodge_pair(HodgePair::Type::IV, HiggsModule::trivial(chIV),
		                                  LiftingDatum::standard(chIV), 0, 0, k % 3 == 0);
		RingElement g = RingElement::monomial(chIV.fine(), ExpVec{1, 1});
		FormalGTransform tr = formal_g_transform(pair, g, 0);
		for (int i = 0; i < 4; ++i)
			if (!tr.isos[i].pass)
				c.fail("composite isomorphism " + std::to_string(i + 1) + " failed, instance " +
				       std::to_string(k));
	}
	c.finish();
}

void criterion_cli()
{
	Criterion c("11 cli-contract", 5.0);
	auto load = [&](const std::string &name) {
		std::ifstream in(std::string(CARTIERLAB_INSTANCE_DIR) + "/" + name);
		Json j;
		in >> j;
		return j;
	};
	for (auto name : {"deligne-illusie-p3.json", "kunneth-p3.json"})
	{
		try
		{
			Instance inst = parse_instance(load(name));
			Report rep = run_instance(inst);
			if (!rep.all_pass())
				c.fail(std::string(name) + " did not pass");
			Report rep2 = run_instance(inst);
			if (report_json(rep).dump() != report_json(rep2).dump())
				c.fail("report bytes unstable");
		}
		catch (const std::exception &e)
		{
			c.fail(std::string(name) + ": " + e.what());
		}
	}
	// corrupted data must be rejected with a located diagnostic
	try
	{
		parse_instance(load("corrupted-integrability.json"));
		c.fail("corrupted instance was accepted");
	}
	catch (const Error &e)
	{
		if (std::string(e.what()).find("integrability") == std::string::npos)
			c.fail("diagnostic lacks the violation site");
	}
	// a false acyclicity claim fails with a witness degree
	{
		Instance inst = parse_instance(load("failing-stratum.json"));
		Report rep = run_instance(inst);
		if (rep.all_pass() || rep.rows[0].witness.find("degree") == std::string::npos)
			c.fail("expected a failing verdict with a witness degree");
	}
	c.finish();
}

} // namespace

int main()
{
	criterion_classical_cartier();
	criterion_kv_acyclicity();
	criterion_twisted_composite();
	criterion_artin_hasse();
	auto corpus = identity_corpus();
	criterion_infty_homotopy(corpus);
	criterion_base_free(corpus);
	criterion_splitting_homotopy(corpus);
	criterion_subcomplex_compat();
	criterion_kunneth();
	criterion_twist_table();
	criterion_cli();
	if (failures)
	{
		std::cout << failures << " criterion(s) FAILED\n";
		return 1;
	}
	std::cout << "all criteria passed\n";
	return 0;
}
