// Link the system OpenBLAS, which bundles BLAS, CBLAS and LAPACK. The
// LAPACK bindings are backend-agnostic and expect the final link to
// provide the symbols.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
