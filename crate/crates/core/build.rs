fn main() {
    // Clarabel's SDP support calls BLAS/LAPACK; use the system OpenBLAS, which
    // ships both.
    println!("cargo:rustc-link-lib=openblas");
}
