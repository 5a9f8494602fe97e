#pragma once

#include "cartierlab/instance.hpp"

#include <future>
#include <random>
#include <sstream>

namespace cartierlab {

inline const char *tool_version() { return "cartierlab 0.1.0"; }

struct ReportRow
{
	int index = 0;
	std::string check;
	std::string tag; // which identity the check exercises
	bool pass = false;
	std::string witness;
	std::vector<HomologyRow> table; // optional homology table
};

struct Report
{
	std::string instance_name;
	std::string digest;
	std::vector<ReportRow> rows;

	bool all_pass() const
	{
		for (auto &r : rows)
			if (!r.pass)
				return false;
		return true;
	}
};

inline std::string fnv_digest(const std::string &data)
{
	uint64_t h = 1469598103934665603ull;
	for (unsigned char c : data)
	{
		h ^= c;
		h *= 1099511628211ull;
	}
	std::ostringstream os;
	os << std::hex << h;
	return os.str();
}

/// random data helpers shared by the runner and the corpus generator;
/// deterministic across platforms (raw modulo draws from mt19937_64)
inline RingElement random_poly(Ring rg, std::mt19937_64 &rng, int terms, bool no_constant)
{
	RingElement f(rg);
	for (int t = 0; t < terms; ++t)
	{
		ExpVec e(rg.n);
		bool zero = true;
		for (int i = 0; i < rg.n; ++i)
		{
			e[i] = (uint8_t)(rng() % rg.cap);
			if (e[i])
				zero = false;
		}
		if (no_constant && zero)
			continue;
		f.add_term(e, (int)(rng() % rg.p));
	}
	return f;
}

// ---------------------------------------------------------------------------
// check implementations

namespace checks {

inline ReportRow homology_table(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "homology";
	row.tag = "homology-ranks";
	std::string side = params.value("side", "derham");
	if (side == "higgs")
	{
		ComplexModel M = higgs_complex_model(inst.higgs);
		row.table = homology_ranks(M.cx);
	}
	else
	{
		LambdaConnection H = inverse_cartier_local(inst.higgs, inst.liftings[0]);
		ComplexModel M = lambda_complex_model(H);
		row.table = homology_ranks(M.cx);
	}
	row.pass = true;
	return row;
}

inline SelectorKind parse_kind(const std::string &s)
{
	if (s == "full")
		return SelectorKind::Full;
	if (s == "weight")
		return SelectorKind::Weight;
	if (s == "intersection")
		return SelectorKind::Intersection;
	if (s == "kontsevich")
		return SelectorKind::Kontsevich;
	throw ParseError("unknown selector kind: " + s);
}

inline ReportRow cartier_qis(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "cartier_qis";
	row.tag = "cartier-quasi-isomorphism";
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	CartierQis q = local_cartier_qis(inst.higgs, inst.liftings[0], kind, inst.weight_index);
	row.pass = q.chain_map.pass && q.quasi_iso.pass && q.onto_zero_stratum.pass;
	if (!row.pass)
		row.witness = "degree " + std::to_string(q.quasi_iso.witness_degree) + " " + q.quasi_iso.witness;
	return row;
}

inline ReportRow kv_acyclic(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "kv_acyclic";
	row.tag = "koszul-stratum-acyclicity";
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	GradedFStar G = fstar_complex(inst.higgs, inst.liftings[0], kind, inst.weight_index);
	const Chart &ch = inst.chart;
	long total = 1;
	for (int i = 0; i < ch.n; ++i)
		total *= ch.p;
	row.pass = true;
	for (long v = 1; v < total; ++v)
	{
		ChainComplex S = (kind == SelectorKind::Full)
		                     ? kv_subcomplex(G, inst.higgs, decode_residue(v, ch.p, ch.n))
		                     : G.stratum(v);
		if (!is_acyclic(S))
		{
			row.pass = false;
			row.witness = "stratum " + std::to_string(v);
			break;
		}
	}
	return row;
}

inline ReportRow stratum_acyclic(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "stratum_acyclic";
	row.tag = "koszul-stratum-acyclicity";
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	std::vector<int> v = params.value("v", std::vector<int>(inst.chart.n, 0));
	GradedFStar G = fstar_complex(inst.higgs, inst.liftings[0], kind, inst.weight_index);
	ChainComplex S = G.stratum(encode_residue(v, inst.chart.p));
	row.pass = is_acyclic(S);
	if (!row.pass)
		for (int q = S.lo; q <= S.hi; ++q)
			if (homology_dim(S, q))
			{
				row.witness = "degree " + std::to_string(q) + " has homology dimension " +
				              std::to_string(homology_dim(S, q));
				break;
			}
	return row;
}

inline ReportRow artin_hasse_check(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "artin_hasse";
	row.tag = "artin-hasse-unit";
	int count = params.value("count", 20);
	std::mt19937_64 rng(inst.seed);
	row.pass = true;
	for (int rep = 0; rep < count && row.pass; ++rep)
	{
		RingElement f = random_poly(inst.chart.fine(), rng, 5, true);
		ArtinHasseUnit ah = artin_hasse(inst.chart, f);
		if (!artin_hasse_identity(inst.chart, ah))
		{
			row.pass = false;
			row.witness = "f = " + f.str();
		}
	}
	if (inst.has_f && row.pass && inst.f.is_nilpotent())
	{
		ArtinHasseUnit ah = artin_hasse(inst.chart, inst.f);
		if (!artin_hasse_identity(inst.chart, ah))
		{
			row.pass = false;
			row.witness = "bundled f";
		}
	}
	return row;
}

inline ReportRow deformation_check(const Instance &inst, const Json &)
{
	ReportRow row;
	row.check = "theta_deformation";
	row.tag = "field-deformation-identities";
	ThetaDeformation def = theta_deformation(inst.higgs, inst.f);
	std::string witness;
	if (!deformation_identities(def, &witness))
	{
		row.witness = witness;
		return row;
	}
	PsiIso psi = psi_iso(def, PsiVariant::Plain);
	if (!psi.certify_iso.pass)
	{
		row.witness = "plain isomorphism failed";
		return row;
	}
	if (!ah_conjugate(def, inst.liftings[0], &witness))
	{
		row.witness = "conjugation: " + witness;
		return row;
	}
	row.pass = true;
	return row;
}

inline ReportRow twisted_qis(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "twisted_qis";
	row.tag = "twisted-cartier-quasi-isomorphism";
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	TwistedCartierQis q = twisted_cartier_qis(inst.higgs, inst.f, inst.liftings[0], kind,
	                                          inst.weight_index);
	row.pass = q.chain_map.pass && q.quasi_iso.pass;
	if (!row.pass)
		row.witness = "degree " + std::to_string(q.quasi_iso.witness_degree);
	return row;
}

inline ReportRow exp_twist_table(const Instance &inst, const Json &)
{
	ReportRow row;
	row.check = "exp_twist_table";
	row.tag = "exponential-twist-table";
	const Chart &ch = inst.chart;
	HiggsModule E = inst.higgs;
	LambdaConnection H = inverse_cartier_local(E, inst.liftings[0]);
	HiggsModule Et = twist_exact(E, coarsen(ch, inst.f), -1);
	LambdaConnection Ht = twist_exact(H, inst.f, +1);
	ComplexModel ME = higgs_complex_model(E), MEt = higgs_complex_model(Et);
	ComplexModel MH = lambda_complex_model(H), MHt = lambda_complex_model(Ht);
	auto same_span = [&](const FpMatrix &A, const FpMatrix &B) {
		Span sa(ch.p, A.rows);
		for (int j = 0; j < A.cols; ++j)
			sa.insert(A.col(j));
		Span sb(ch.p, B.rows);
		for (int j = 0; j < B.cols; ++j)
			sb.insert(B.col(j));
		if (sa.rank() != sb.rank())
			return false;
		for (int j = 0; j < B.cols; ++j)
			if (!sa.contains(B.col(j)))
				return false;
		return true;
	};
	std::vector<std::pair<SelectorKind, const char *>> kinds = {
	    {SelectorKind::Weight, "weight"},
	    {SelectorKind::Intersection, "intersection"}};
	if (ch.s >= 1)
		kinds.push_back({SelectorKind::Kontsevich, "kontsevich"});
	row.pass = true;
	for (auto &[kind, name] : kinds)
	{
		Subcomplex a = selector_subcomplex(ME, kind, inst.weight_index);
		Subcomplex b = selector_subcomplex(MEt, kind, inst.weight_index);
		Subcomplex c = selector_subcomplex(MH, kind, inst.weight_index);
		Subcomplex d = selector_subcomplex(MHt, kind, inst.weight_index);
		for (int q = 0; q <= ch.n && row.pass; ++q)
			if (!same_span(a.basis[q], b.basis[q]) || !same_span(c.basis[q], d.basis[q]))
			{
				row.pass = false;
				row.witness = std::string(name) + " span mismatch in degree " + std::to_string(q);
			}
	}
	return row;
}

inline ReportRow g_transform(const Instance &inst, const Json &)
{
	ReportRow row;
	row.check = "formal_g_transform";
	row.tag = "fiber-transform-isomorphisms";
	HodgePair pair = build_hodge_pair(inst.pair_type, inst.higgs, inst.liftings[0], inst.weight_index,
	                                  inst.fiber_lambda, inst.iv_weight_flavor);
	FormalGTransform tr = formal_g_transform(pair, inst.f, inst.fiber_lambda);
	row.pass = true;
	for (int k = 0; k < 4; ++k)
		if (!tr.isos[k].pass)
		{
			row.pass = false;
			row.witness = "isomorphism " + std::to_string(k + 1) + " degree " +
			              std::to_string(tr.isos[k].witness_degree);
		}
	return row;
}

inline ReportRow infty_homotopy(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "infty_homotopy";
	row.tag = "infty-homotopy-relation";
	const OrderedSplitting &sp = inst.splittings[0];
	PhiEngine eng = make_engine(inst.higgs, inst.liftings, sp.P);
	int trunc = params.value("truncate_below", -1);
	auto tuples = increasing_tuples((int)inst.liftings.size(), (int)inst.liftings.size() - 1);
	row.pass = true;
	for (int r = 1; r < (int)tuples.size() && row.pass; ++r)
		for (auto &tuple : tuples[r])
		{
			IdentityCheck c = verify_infty_homotopy(eng, tuple, sp.D, trunc);
			if (!c.pass)
			{
				row.pass = false;
				row.witness = "degree " + std::to_string(c.degree) + " " + c.witness;
				break;
			}
		}
	return row;
}

inline ReportRow base_free(const Instance &inst, const Json &)
{
	ReportRow row;
	row.check = "base_free";
	row.tag = "base-free-lift";
	const OrderedSplitting &sp = inst.splittings[0];
	PhiEngine eng = make_engine(inst.higgs, inst.liftings, sp.P);
	auto tuples = increasing_tuples((int)inst.liftings.size(), (int)inst.liftings.size() - 1);
	row.pass = true;
	for (int r = 1; r < (int)tuples.size() && row.pass; ++r)
		for (auto &tuple : tuples[r])
			for (int s = 0; s + r <= inst.chart.n && row.pass; ++s)
			{
				FpMatrix a = phi_component(eng, tuple, sp.D, s);
				FpMatrix b = phi_tilde_sec_component(eng, tuple, sp.D, s);
				if (!(a == b))
				{
					row.pass = false;
					row.witness = "r=" + std::to_string(r) + " s=" + std::to_string(s);
				}
			}
	// one random block-respecting change of basis must leave the components
	// unchanged
	if (row.pass)
	{
		std::mt19937_64 rng(inst.seed + 17);
		const Chart &ch = inst.chart;
		FpMatrix B = FpMatrix::identity(ch.p, ch.n);
		for (int b = 1; b <= sp.beta; ++b)
		{
			auto mem = sp.block_members(b);
			// random invertible block: unit upper triangular with random
			// diagonal
			for (size_t i = 0; i < mem.size(); ++i)
			{
				B(mem[i], mem[i]) = (uint8_t)(1 + rng() % (ch.p - 1));
				for (size_t j = i + 1; j < mem.size(); ++j)
					B(mem[i], mem[j]) = (uint8_t)(rng() % ch.p);
			}
		}
		PhiEngine eng2 = make_engine(inst.higgs, inst.liftings, sp.P * B);
		auto tuples2 = increasing_tuples((int)inst.liftings.size(), (int)inst.liftings.size() - 1);
		for (int r = 0; r < (int)tuples2.size() && row.pass; ++r)
			for (auto &tuple : tuples2[r])
				for (int s = 0; s + r <= inst.chart.n && row.pass; ++s)
					if (!(phi_component(eng, tuple, sp.D, s) == phi_component(eng2, tuple, sp.D, s)))
					{
						row.pass = false;
						row.witness = "basis dependence at r=" + std::to_string(r);
					}
	}
	return row;
}

inline ReportRow splitting_homotopy(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "splitting_homotopy";
	row.tag = "splitting-comparison-identity";
	const OrderedSplitting &sp = inst.splittings[0];
	int o = params.value("o", 1);
	PhiEngine eng = make_engine(inst.higgs, inst.liftings, sp.P);
	auto tuples = increasing_tuples((int)inst.liftings.size(), (int)inst.liftings.size() - 1);
	row.pass = true;
	for (int r = 1; r < (int)tuples.size() && row.pass; ++r)
		for (auto &tuple : tuples[r])
		{
			IdentityCheck c = verify_splitting_homotopy(eng, tuple, sp.D, o);
			if (!c.pass)
			{
				row.pass = false;
				row.witness = "degree " + std::to_string(c.degree) + " " + c.witness;
				break;
			}
		}
	return row;
}

inline ReportRow cech_qis(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "cech_qis";
	row.tag = "assembled-comparison-quasi-isomorphism";
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	const OrderedSplitting &sp = inst.splittings[0];
	PhiEngine eng = make_engine(inst.higgs, inst.liftings, sp.P);
	int trunc = params.value("truncate_below", -1);
	AssembledMap am = cech_assemble(eng, sp.D, kind, inst.weight_index, trunc);
	row.pass = am.chain_map.pass && am.quasi_iso.pass;
	if (!row.pass)
		row.witness = am.chain_map.pass ? ("qis degree " + std::to_string(am.quasi_iso.witness_degree))
		                                : ("chain map degree " + std::to_string(am.chain_map.witness_degree));
	return row;
}

inline ReportRow subcomplex_compat(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "subcomplex_compat";
	row.tag = "selector-compatibility";
	SelectorKind kind = parse_kind(params.value("kind", "intersection"));
	bool include_psi = params.value("include_psi", true);
	const OrderedSplitting &sp = inst.splittings[0];
	PhiEngine eng = make_engine(inst.higgs, inst.liftings, sp.P);
	IdentityCheck c = verify_subcomplex_compat(eng, sp, kind, inst.weight_index, include_psi);
	row.pass = c.pass;
	if (!c.pass)
		row.witness = "degree " + std::to_string(c.degree) + " " + c.witness;
	return row;
}

inline ReportRow two_term(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "two_term";
	row.tag = "two-term-window-comparison";
	int a = params.value("a", 0);
	SelectorKind kind = parse_kind(params.value("kind", "full"));
	std::vector<OrderedSplitting> chain = inst.splittings;
	if (params.contains("chain"))
	{
		chain.clear();
		for (auto &cj : params["chain"])
			chain.push_back(parse_splitting(cj, inst.chart, "two_term.chain"));
	}
	TwoTermReport rep = verify_two_term(inst.higgs, inst.liftings, chain, kind, inst.weight_index, a);
	row.pass = rep.pass;
	row.witness = rep.detail;
	return row;
}

inline ReportRow kunneth(const Instance &inst, const Json &params)
{
	ReportRow row;
	row.check = "kunneth";
	row.tag = "product-factorization";
	if (!params.contains("factor"))
		throw ParseError("kunneth: missing the second factor instance");
	Instance other = parse_instance(params["factor"]);
	KunnethResult res = kunneth_verify(inst.higgs, inst.liftings, other.higgs, other.liftings);
	row.pass = res.pass;
	row.witness = res.detail;
	return row;
}

} // namespace checks

inline ReportRow run_check(const Instance &inst, const Json &check)
{
	if (!check.is_object() || !check.contains("check"))
		throw ParseError("plan entries need a check field");
	std::string kind = check["check"].get<std::string>();
	if (kind == "homology")
		return checks::homology_table(inst, check);
	if (kind == "cartier_qis")
		return checks::cartier_qis(inst, check);
	if (kind == "kv_acyclic")
		return checks::kv_acyclic(inst, check);
	if (kind == "stratum_acyclic")
		return checks::stratum_acyclic(inst, check);
	if (kind == "artin_hasse")
		return checks::artin_hasse_check(inst, check);
	if (kind == "theta_deformation")
		return checks::deformation_check(inst, check);
	if (kind == "twisted_qis")
		return checks::twisted_qis(inst, check);
	if (kind == "exp_twist_table")
		return checks::exp_twist_table(inst, check);
	if (kind == "formal_g_transform")
		return checks::g_transform(inst, check);
	if (kind == "infty_homotopy")
		return checks::infty_homotopy(inst, check);
	if (kind == "base_free")
		return checks::base_free(inst, check);
	if (kind == "splitting_homotopy")
		return checks::splitting_homotopy(inst, check);
	if (kind == "cech_qis")
		return checks::cech_qis(inst, check);
	if (kind == "subcomplex_compat")
		return checks::subcomplex_compat(inst, check);
	if (kind == "two_term")
		return checks::two_term(inst, check);
	if (kind == "kunneth")
		return checks::kunneth(inst, check);
	throw ParseError("unknown check: " + kind);
}

inline int thread_budget()
{
	const char *env = std::getenv("CARTIERLAB_THREADS");
	if (!env)
		return 1;
	int t = std::atoi(env);
	return t < 1 ? 1 : t;
}

/// run the whole plan; rows come back in plan order regardless of scheduling
inline Report run_instance(const Instance &inst)
{
	Report rep;
	rep.instance_name = inst.name;
	rep.digest = fnv_digest(inst.raw.dump());
	int budget = thread_budget();
	std::vector<ReportRow> rows(inst.plan.size());
	if (budget <= 1)
	{
		for (size_t i = 0; i < inst.plan.size(); ++i)
		{
			rows[i] = run_check(inst, inst.plan[i]);
			rows[i].index = (int)i;
		}
	}
	else
	{
		std::vector<std::future<ReportRow>> futs;
		for (size_t i = 0; i < inst.plan.size(); ++i)
			futs.push_back(std::async(std::launch::async, [&inst, i] {
				ReportRow r = run_check(inst, inst.plan[i]);
				r.index = (int)i;
				return r;
			}));
		for (size_t i = 0; i < futs.size(); ++i)
			rows[i] = futs[i].get();
	}
	rep.rows = std::move(rows);
	return rep;
}

inline std::string report_text(const Report &rep)
{
	std::ostringstream os;
	os << "instance: " << rep.instance_name << "\n";
	os << "tool: " << tool_version() << "\n";
	os << "digest: " << rep.digest << "\n";
	for (auto &row : rep.rows)
	{
		os << (row.pass ? "PASS " : "FAIL ") << row.check << " [" << row.tag << "]";
		if (!row.witness.empty())
			os << " -- " << row.witness;
		os << "\n";
		for (auto &h : row.table)
			os << "  H^" << h.degree << ": ker " << h.dim_ker << ", im " << h.dim_im_in << ", dim "
			   << h.dim_h << "\n";
	}
	os << (rep.all_pass() ? "all checks passed" : "some checks FAILED") << "\n";
	return os.str();
}

inline Json report_json(const Report &rep)
{
	Json out;
	out["instance"] = rep.instance_name;
	out["tool"] = tool_version();
	out["digest"] = rep.digest;
	Json rows = Json::array();
	for (auto &row : rep.rows)
	{
		Json r;
		r["check"] = row.check;
		r["tag"] = row.tag;
		r["status"] = row.pass ? "pass" : "fail";
		if (!row.witness.empty())
			r["witness"] = row.witness;
		if (!row.table.empty())
		{
			Json t = Json::array();
			for (auto &h : row.table)
				t.push_back({{"degree", h.degree},
				             {"ker", h.dim_ker},
				             {"im", h.dim_im_in},
				             {"h", h.dim_h}});
			r["homology"] = t;
		}
		rows.push_back(r);
	}
	out["rows"] = rows;
	out["ok"] = rep.all_pass();
	return out;
}

} // namespace cartierlab
