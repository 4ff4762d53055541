pub mod catalog;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod geom;
pub mod map;
pub mod degree;
pub mod linking;
pub mod mesh;
pub mod sobolev;

pub use error::{Error, Result};
pub use map::MapOracle;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spheres.md")]
    mod spheres {}
    #[doc = include_str!("../../../book/src/degree.md")]
    mod degree {}
    #[doc = include_str!("../../../book/src/linking.md")]
    mod linking {}
    #[doc = include_str!("../../../book/src/sobolev.md")]
    mod sobolev {}
    #[doc = include_str!("../../../book/src/extension.md")]
    mod extension {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
