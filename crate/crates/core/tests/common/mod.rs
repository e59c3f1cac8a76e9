#![allow(dead_code)]

pub mod random;
pub mod sphere;
