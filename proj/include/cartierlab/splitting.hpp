#pragma once

#include "cartierlab/form.hpp"

#include <functional>

namespace cartierlab {

/// Ordered direct-sum decomposition of the basis-form module.  Block k
/// (1-based) is spanned by the adapted forms {omega~_j : D[j] = k}, where
/// omega~_j = sum_l P(l,j) omega_l.  D must be nondecreasing and surjective;
/// P is a constant invertible change of basis (identity by default).
struct OrderedSplitting
{
	int beta = 1;
	std::vector<int> D; // size n, 1-based block values
	FpMatrix P;         // n x n over F_p

	OrderedSplitting() = default;
	OrderedSplitting(const Chart &ch, std::vector<int> D_) : OrderedSplitting(ch, std::move(D_), FpMatrix::identity(ch.p, ch.n)) {}
	OrderedSplitting(const Chart &ch, std::vector<int> D_, FpMatrix P_) : D(std::move(D_)), P(std::move(P_))
	{
		if ((int)D.size() != ch.n)
			throw Error("splitting block map has wrong length");
		beta = 0;
		for (size_t j = 0; j < D.size(); ++j)
		{
			if (j > 0 && D[j] < D[j - 1])
				throw Error("splitting block map must be nondecreasing");
			if (D[j] < 1 || (j > 0 && D[j] > D[j - 1] + 1) || (j == 0 && D[j] != 1))
				throw Error("splitting block map must be surjective onto 1..beta");
			beta = std::max(beta, D[j]);
		}
		if (P.rows != ch.n || P.cols != ch.n)
			throw Error("splitting basis matrix has wrong shape");
		inverse(P); // throws when singular
	}

	static OrderedSplitting trivial(const Chart &ch)
	{
		return OrderedSplitting(ch, std::vector<int>(ch.n, 1));
	}
	static OrderedSplitting finest(const Chart &ch)
	{
		std::vector<int> d(ch.n);
		for (int i = 0; i < ch.n; ++i)
			d[i] = i + 1;
		return OrderedSplitting(ch, d);
	}

	int block(int j) const { return D[j]; } // 0-based coordinate
	int rank_of_block(int b) const
	{
		return (int)std::count(D.begin(), D.end(), b);
	}
	int max_block_rank() const
	{
		int m = 0;
		for (int b = 1; b <= beta; ++b)
			m = std::max(m, rank_of_block(b));
		return m;
	}
	std::vector<int> block_members(int b) const // 0-based coordinates
	{
		std::vector<int> v;
		for (size_t j = 0; j < D.size(); ++j)
			if (D[j] == b)
				v.push_back((int)j);
		return v;
	}
	bool is_identity_basis() const
	{
		return P == FpMatrix::identity(P.p, P.rows);
	}

	/// collapse blocks o and o+1 into one
	OrderedSplitting merge(const Chart &ch, int o) const
	{
		if (o < 1 || o >= beta)
			throw Error("merge index out of range");
		std::vector<int> d = D;
		for (auto &x : d)
			if (x > o)
				--x;
		return OrderedSplitting(ch, std::move(d), P);
	}
};

/// Convert a form written in the standard basis into antisymmetric
/// coefficients against the adapted basis: for sorted K = (k_1 < .. < k_q)
/// the returned map sends K to the coefficient of omega~_{k_1} ^ .. ^
/// omega~_{k_q}.  With P = id this is the identity relabeling.
inline std::map<Subset, RingElement> adapt_coefficients(const LogForm &xi, const OrderedSplitting &sp)
{
	std::map<Subset, RingElement> out;
	if (xi.is_zero())
		return out;
	int n = xi.chart.n, p = xi.chart.p;
	FpMatrix Q = inverse(sp.P); // omega_l = sum_k Q(k,l) omega~_k  (columns of P give omega~ in omega)
	// expand each standard wedge in the adapted basis
	for (auto &[L, a] : xi.comps)
	{
		auto ls = subset_elems(L);
		int q = (int)ls.size();
		// iterate over q-subsets K and take det of Q[K rows, L cols]
		std::vector<int> ks;
		std::function<void(int, int)> rec = [&](int start, int depth) {
			if (depth == q)
			{
				// det of submatrix Q[ks, ls]
				FpMatrix sub(p, q, q);
				for (int i = 0; i < q; ++i)
					for (int j = 0; j < q; ++j)
						sub(i, j) = Q(ks[i], ls[j]);
				// determinant by elimination
				int det = 1;
				FpMatrix w = sub;
				for (int cpos = 0; cpos < q; ++cpos)
				{
					int sel = -1;
					for (int i = cpos; i < q; ++i)
						if (w(i, cpos))
						{
							sel = i;
							break;
						}
					if (sel < 0)
					{
						det = 0;
						break;
					}
					if (sel != cpos)
					{
						for (int j = 0; j < q; ++j)
							std::swap(w(sel, j), w(cpos, j));
						det = fp_neg(det, p);
					}
					det = det * w(cpos, cpos) % p;
					int inv = fp_inv(w(cpos, cpos), p);
					for (int i = cpos + 1; i < q; ++i)
					{
						int f = (p - w(i, cpos) * inv % p) % p;
						if (!f)
							continue;
						for (int j = cpos; j < q; ++j)
							w(i, j) = (uint8_t)((w(i, j) + f * w(cpos, j)) % p);
					}
				}
				if (det)
				{
					Subset K = subset_of(ks);
					RingElement term = a.scale(det);
					auto it = out.find(K);
					if (it == out.end())
						out.emplace(K, term);
					else
					{
						it->second = it->second + term;
						if (it->second.is_zero())
							out.erase(it);
					}
				}
				return;
			}
			for (int k = start; k <= n - (q - depth); ++k)
			{
				ks.push_back(k);
				rec(k + 1, depth + 1);
				ks.pop_back();
			}
		};
		rec(0, 0);
	}
	return out;
}

/// Pure tensors in the block-tensor space.  Entries are adapted-basis form
/// indices grouped contiguously by block.
struct BlockTensor
{
	std::vector<int> factors; // 0-based adapted indices, block-sorted
	int coeff = 1;            // F_p coefficient
};

/// Canonical section of the projection from block tensors onto wedges.
/// Each block of the input wedge is antisymmetrized with 1/q_b! and blocks
/// are tensored in block order.  Input: sorted index list in K; returns the
/// list of signed pure tensors (coefficients in F_p).
inline std::vector<BlockTensor> sec_split_indices(const std::vector<int> &K, const OrderedSplitting &sp, int p)
{
	// group indices by block; K sorted ascending means blocks appear in
	// nondecreasing order already (D nondecreasing), so no global sign
	std::vector<std::vector<int>> blocks(sp.beta + 1);
	for (int k : K)
		blocks[sp.block(k)].push_back(k);
	for (int b = 1; b <= sp.beta; ++b)
		if ((int)blocks[b].size() >= p)
			throw Error("blockwise degree must stay below p for the section");
	std::vector<BlockTensor> acc{BlockTensor{{}, 1}};
	for (int b = 1; b <= sp.beta; ++b)
	{
		auto &blk = blocks[b];
		int q = (int)blk.size();
		if (q == 0)
			continue;
		// all permutations with sign / q!
		long fact = 1;
		for (int i = 2; i <= q; ++i)
			fact *= i;
		int invf = fp_inv(fp_red(fact, p), p);
		std::vector<int> idx = blk;
		std::sort(idx.begin(), idx.end());
		std::vector<std::pair<std::vector<int>, int>> perms;
		do
		{
			int sgn = 1;
			for (size_t i = 0; i < idx.size(); ++i)
				for (size_t j = i + 1; j < idx.size(); ++j)
					if (idx[i] > idx[j])
						sgn = -sgn;
			perms.push_back({idx, sgn});
		} while (std::next_permutation(idx.begin(), idx.end()));
		std::vector<BlockTensor> next;
		for (auto &t : acc)
			for (auto &[perm, sgn] : perms)
			{
				BlockTensor u = t;
				u.factors.insert(u.factors.end(), perm.begin(), perm.end());
				u.coeff = fp_red((long)u.coeff * sgn * invf, p);
				next.push_back(std::move(u));
			}
		acc = std::move(next);
	}
	return acc;
}

} // namespace cartierlab
