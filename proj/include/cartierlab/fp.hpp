#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cartierlab {

struct Error : std::runtime_error {
	explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Residues are stored as uint8_t in [0, p).  All primes at desk scale are
// tiny, so inverses go through Fermat.
inline int fp_add(int a, int b, int p) { return (a + b) % p; }
inline int fp_sub(int a, int b, int p) { return (a - b % p + p * p) % p; }
inline int fp_mul(int a, int b, int p) { return (a * b) % p; }
inline int fp_neg(int a, int p) { return (p - a % p) % p; }

inline int fp_pow(int a, long e, int p)
{
	a %= p;
	if (a < 0)
		a += p;
	int r = 1 % p;
	while (e > 0)
	{
		if (e & 1)
			r = r * a % p;
		a = a * a % p;
		e >>= 1;
	}
	return r;
}

inline int fp_inv(int a, int p)
{
	a %= p;
	if (a < 0)
		a += p;
	if (a == 0)
		throw Error("division by zero in F_" + std::to_string(p));
	return fp_pow(a, p - 2, p);
}

// reduce an arbitrary (possibly negative) integer
inline int fp_red(long a, int p)
{
	long r = a % p;
	if (r < 0)
		r += p;
	return (int)r;
}

/// Dense matrix over F_p with 8-bit entries.  Acts on column vectors.
class FpMatrix
{
  public:
	int p = 2;
	int rows = 0, cols = 0;
	std::vector<uint8_t> a; // row-major

	FpMatrix() = default;
	FpMatrix(int p_, int r, int c) : p(p_), rows(r), cols(c), a((size_t)r * c, 0) {}

	static FpMatrix identity(int p, int n)
	{
		FpMatrix m(p, n, n);
		for (int i = 0; i < n; ++i)
			m(i, i) = 1;
		return m;
	}
	static FpMatrix zero(int p, int r, int c) { return FpMatrix(p, r, c); }

	uint8_t &operator()(int i, int j) { return a[(size_t)i * cols + j]; }
	uint8_t operator()(int i, int j) const { return a[(size_t)i * cols + j]; }

	bool operator==(const FpMatrix &o) const
	{
		return p == o.p && rows == o.rows && cols == o.cols && a == o.a;
	}

	bool is_zero() const
	{
		for (auto x : a)
			if (x)
				return false;
		return true;
	}

	FpMatrix operator+(const FpMatrix &o) const
	{
		assert(rows == o.rows && cols == o.cols);
		FpMatrix r(p, rows, cols);
		for (size_t i = 0; i < a.size(); ++i)
			r.a[i] = (uint8_t)((a[i] + o.a[i]) % p);
		return r;
	}
	FpMatrix operator-(const FpMatrix &o) const
	{
		assert(rows == o.rows && cols == o.cols);
		FpMatrix r(p, rows, cols);
		for (size_t i = 0; i < a.size(); ++i)
			r.a[i] = (uint8_t)((a[i] + p - o.a[i]) % p);
		return r;
	}
	FpMatrix operator*(const FpMatrix &o) const
	{
		assert(cols == o.rows && p == o.p);
		FpMatrix r(p, rows, o.cols);
		for (int i = 0; i < rows; ++i)
			for (int k = 0; k < cols; ++k)
			{
				int f = (*this)(i, k);
				if (!f)
					continue;
				const uint8_t *src = &o.a[(size_t)k * o.cols];
				uint8_t *dst = &r.a[(size_t)i * o.cols];
				for (int j = 0; j < o.cols; ++j)
					dst[j] = (uint8_t)((dst[j] + f * src[j]) % p);
			}
		return r;
	}
	FpMatrix scale(int c) const
	{
		c = fp_red(c, p);
		FpMatrix r(p, rows, cols);
		for (size_t i = 0; i < a.size(); ++i)
			r.a[i] = (uint8_t)(a[i] * c % p);
		return r;
	}

	std::vector<uint8_t> apply(const std::vector<uint8_t> &v) const
	{
		assert((int)v.size() == cols);
		std::vector<uint8_t> r(rows, 0);
		for (int i = 0; i < rows; ++i)
		{
			int s = 0;
			const uint8_t *row = &a[(size_t)i * cols];
			for (int j = 0; j < cols; ++j)
				s += row[j] * v[j];
			r[i] = (uint8_t)(s % p);
		}
		return r;
	}

	FpMatrix transpose() const
	{
		FpMatrix r(p, cols, rows);
		for (int i = 0; i < rows; ++i)
			for (int j = 0; j < cols; ++j)
				r(j, i) = (*this)(i, j);
		return r;
	}

	void set_col(int j, const std::vector<uint8_t> &v)
	{
		assert((int)v.size() == rows);
		for (int i = 0; i < rows; ++i)
			(*this)(i, j) = v[i];
	}
	std::vector<uint8_t> col(int j) const
	{
		std::vector<uint8_t> v(rows);
		for (int i = 0; i < rows; ++i)
			v[i] = (*this)(i, j);
		return v;
	}

	static FpMatrix hcat(const FpMatrix &l, const FpMatrix &r)
	{
		assert(l.rows == r.rows && l.p == r.p);
		FpMatrix m(l.p, l.rows, l.cols + r.cols);
		for (int i = 0; i < l.rows; ++i)
		{
			for (int j = 0; j < l.cols; ++j)
				m(i, j) = l(i, j);
			for (int j = 0; j < r.cols; ++j)
				m(i, l.cols + j) = r(i, j);
		}
		return m;
	}
};

/// Row-echelon accumulator.  Inserted vectors are reduced against the
/// current rows; independent vectors extend the basis.  Used for spans,
/// membership and rank bookkeeping.
class Span
{
  public:
	int p = 2;
	int dim = 0;
	std::vector<std::vector<uint8_t>> rows; // echelon rows, unit pivots
	std::vector<int> pivots;                // pivot column per row

	Span() = default;
	Span(int p_, int dim_) : p(p_), dim(dim_) {}

	int rank() const { return (int)rows.size(); }

	// reduce v in place against the echelon rows; returns pivot position of
	// the residue or -1 when v lies in the span
	int reduce(std::vector<uint8_t> &v) const
	{
		for (size_t k = 0; k < rows.size(); ++k)
		{
			int c = pivots[k];
			if (v[c])
			{
				int f = p - v[c];
				const uint8_t *r = rows[k].data();
				for (int j = c; j < dim; ++j)
					v[j] = (uint8_t)((v[j] + f * r[j]) % p);
			}
		}
		for (int j = 0; j < dim; ++j)
			if (v[j])
				return j;
		return -1;
	}

	bool contains(std::vector<uint8_t> v) const { return reduce(v) < 0; }

	// returns true when the vector enlarged the span
	bool insert(std::vector<uint8_t> v)
	{
		int piv = reduce(v);
		if (piv < 0)
			return false;
		int inv = fp_inv(v[piv], p);
		for (int j = piv; j < dim; ++j)
			v[j] = (uint8_t)(v[j] * inv % p);
		// keep rows ordered by pivot and fully reduced upward
		size_t pos = 0;
		while (pos < rows.size() && pivots[pos] < piv)
			++pos;
		rows.insert(rows.begin() + pos, v);
		pivots.insert(pivots.begin() + pos, piv);
		for (size_t k = 0; k < rows.size(); ++k)
		{
			if (k == pos)
				continue;
			int c = rows[k][piv];
			if (c)
			{
				int f = p - c;
				for (int j = piv; j < dim; ++j)
					rows[k][j] = (uint8_t)((rows[k][j] + f * v[j]) % p);
			}
		}
		return true;
	}

	// coordinates of v in the inserted-row basis; only valid immediately for
	// solving against echelon rows, so we solve by elimination
	FpMatrix basis_matrix() const
	{
		FpMatrix m(p, dim, rank());
		for (int j = 0; j < rank(); ++j)
			for (int i = 0; i < dim; ++i)
				m(i, j) = rows[j][i];
		return m;
	}
};

inline int rank(const FpMatrix &m)
{
	Span s(m.p, m.cols);
	for (int i = 0; i < m.rows; ++i)
	{
		std::vector<uint8_t> v(m.a.begin() + (size_t)i * m.cols,
		                       m.a.begin() + (size_t)(i + 1) * m.cols);
		s.insert(std::move(v));
	}
	return s.rank();
}

/// columns spanning ker(m)
inline FpMatrix kernel_basis(const FpMatrix &m)
{
	int p = m.p, nr = m.rows, nc = m.cols;
	// eliminate on the transpose augmented with identity
	std::vector<std::vector<uint8_t>> w(nc, std::vector<uint8_t>(nr + nc, 0));
	for (int j = 0; j < nc; ++j)
	{
		for (int i = 0; i < nr; ++i)
			w[j][i] = m(i, j);
		w[j][nr + j] = 1;
	}
	int row = 0;
	for (int col = 0; col < nr && row < nc; ++col)
	{
		int sel = -1;
		for (int i = row; i < nc; ++i)
			if (w[i][col])
			{
				sel = i;
				break;
			}
		if (sel < 0)
			continue;
		std::swap(w[row], w[sel]);
		int inv = fp_inv(w[row][col], p);
		for (int j = col; j < nr + nc; ++j)
			w[row][j] = (uint8_t)(w[row][j] * inv % p);
		for (int i = 0; i < nc; ++i)
		{
			if (i == row || !w[i][col])
				continue;
			int f = p - w[i][col];
			for (int j = col; j < nr + nc; ++j)
				w[i][j] = (uint8_t)((w[i][j] + f * w[row][j]) % p);
		}
		++row;
	}
	FpMatrix ker(p, nc, nc - row);
	int k = 0;
	for (int i = row; i < nc; ++i, ++k)
		for (int j = 0; j < nc; ++j)
			ker(j, k) = w[i][nr + j];
	return ker;
}

/// columns spanning im(m)
inline FpMatrix image_basis(const FpMatrix &m)
{
	Span s(m.p, m.rows);
	std::vector<std::vector<uint8_t>> picked;
	for (int j = 0; j < m.cols; ++j)
	{
		auto v = m.col(j);
		if (s.insert(v))
			picked.push_back(m.col(j));
	}
	FpMatrix r(m.p, m.rows, (int)picked.size());
	for (int j = 0; j < (int)picked.size(); ++j)
		r.set_col(j, picked[j]);
	return r;
}

/// Solve A X = B exactly; throws when inconsistent.
inline FpMatrix solve(const FpMatrix &A, const FpMatrix &B)
{
	assert(A.rows == B.rows && A.p == B.p);
	int p = A.p, nr = A.rows, nc = A.cols, nb = B.cols;
	std::vector<std::vector<uint8_t>> w(nr, std::vector<uint8_t>(nc + nb));
	for (int i = 0; i < nr; ++i)
	{
		for (int j = 0; j < nc; ++j)
			w[i][j] = A(i, j);
		for (int j = 0; j < nb; ++j)
			w[i][nc + j] = B(i, j);
	}
	std::vector<int> pivot_col;
	int row = 0;
	for (int col = 0; col < nc && row < nr; ++col)
	{
		int sel = -1;
		for (int i = row; i < nr; ++i)
			if (w[i][col])
			{
				sel = i;
				break;
			}
		if (sel < 0)
			continue;
		std::swap(w[row], w[sel]);
		int inv = fp_inv(w[row][col], p);
		for (int j = col; j < nc + nb; ++j)
			w[row][j] = (uint8_t)(w[row][j] * inv % p);
		for (int i = 0; i < nr; ++i)
		{
			if (i == row || !w[i][col])
				continue;
			int f = p - w[i][col];
			for (int j = col; j < nc + nb; ++j)
				w[i][j] = (uint8_t)((w[i][j] + f * w[row][j]) % p);
		}
		pivot_col.push_back(col);
		++row;
	}
	for (int i = row; i < nr; ++i)
		for (int j = 0; j < nb; ++j)
			if (w[i][nc + j])
				throw Error("inconsistent linear system");
	FpMatrix X(p, nc, nb);
	for (int k = 0; k < row; ++k)
		for (int j = 0; j < nb; ++j)
			X(pivot_col[k], j) = w[k][nc + j];
	return X;
}

inline FpMatrix inverse(const FpMatrix &A)
{
	assert(A.rows == A.cols);
	FpMatrix X = solve(A, FpMatrix::identity(A.p, A.rows));
	if (!(A * X == FpMatrix::identity(A.p, A.rows)))
		throw Error("matrix not invertible");
	return X;
}

} // namespace cartierlab
