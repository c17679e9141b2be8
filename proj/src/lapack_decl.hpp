#pragma once

// Minimal declarations for the complex LAPACK routines used by the kernels.

#include <complex>

namespace ratvol::lapackf {

using zcplx = std::complex<double>;

extern "C" {

void zgges_(const char* jobvsl, const char* jobvsr, const char* sort, void* selctg,
            const int* n, zcplx* a, const int* lda, zcplx* b, const int* ldb, int* sdim,
            zcplx* alpha, zcplx* beta, zcplx* vsl, const int* ldvsl, zcplx* vsr,
            const int* ldvsr, zcplx* work, const int* lwork, double* rwork, int* bwork,
            int* info);

void ztgexc_(const int* wantq, const int* wantz, const int* n, zcplx* a, const int* lda,
             zcplx* b, const int* ldb, zcplx* q, const int* ldq, zcplx* z, const int* ldz,
             const int* ifst, int* ilst, int* info);

void ztrexc_(const char* compq, const int* n, zcplx* t, const int* ldt, zcplx* q,
             const int* ldq, const int* ifst, const int* ilst, int* info);

void ztrsyl_(const char* trana, const char* tranb, const int* isgn, const int* m,
             const int* n, const zcplx* a, const int* lda, const zcplx* b, const int* ldb,
             zcplx* c, const int* ldc, double* scale, int* info);

}  // extern "C"

}  // namespace ratvol::lapackf
