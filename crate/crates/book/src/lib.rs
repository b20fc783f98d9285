//! mdbook cannot run listings that depend on workspace crates, so each
//! chapter is pulled in here as a doc comment and `cargo test` runs its
//! code blocks. One module per chapter keeps failures attributable.

#[cfg(doctest)]
mod chapters {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/boxes-and-labels.md")]
    mod boxes_and_labels {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
    #[doc = include_str!("../../../book/src/scripts.md")]
    mod scripts {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
