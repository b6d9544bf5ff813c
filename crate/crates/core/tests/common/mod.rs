#![allow(dead_code)]

pub mod lie;
