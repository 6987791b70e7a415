//! Keeps the guide honest: every chapter is attached as documentation of a
//! hidden module here, so its code blocks run under `cargo test --doc`.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $path))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(fock, "fock.md");
chapter!(entanglement, "entanglement.md");
chapter!(dynamics, "dynamics.md");
chapter!(measurement, "measurement.md");
chapter!(protocols, "protocols.md");
chapter!(scenarios, "scenarios.md");
