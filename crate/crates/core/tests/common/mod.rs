#![allow(dead_code)]

use socialtree::dtree::{DecisionTree, Expr};

/// One-hot Q-vector selecting `action`.
pub fn act(action: usize, n_actions: usize) -> Expr {
    let mut q = vec![0.0; n_actions];
    q[action] = 1.0;
    Expr::leaf(q)
}

pub fn node(w: &[f64], b: f64, on_true: Expr, on_false: Expr) -> Expr {
    Expr::split(w.to_vec(), b, on_true, on_false)
}

pub fn inverted_pendulum() -> DecisionTree {
    let a = |i| act(i, 7);
    let root = node(&[-0.224, -5.024, -0.684, -1.678], 0.285, a(5), a(0));
    DecisionTree::new(4, 7, root).unwrap()
}

pub fn lunar_lander() -> DecisionTree {
    let a = |i| act(i, 4);
    let w1 = [-7.2, -4.4, -7.9, -4.7, 6.7, -9.5, 8.7, -3.7];
    let w2 = [-6.3, 0.8, -5.4, 4.5, 5.7, 5.7, 1.4, -1.2];
    let w3 = [4.4, 0.9, 6.8, 4.5, -9.1, -9.4, 7.3, 8.2];
    let w4 = [5.6, 1.5, 4.7, -1.2, -7.7, -9.1, 7.3, 7.9];
    let w5 = [3.9, -9.6, -5.8, -2.6, -3.1, 4.8, 2.7, -7.8];
    let n5 = node(&w5, 7.074, a(3), a(2));
    let n4 = node(&w4, 9.66, n5, a(0));
    let n3 = node(&w3, -0.606, a(2), a(1));
    let n2 = node(&w2, -0.955, n3, n4);
    let root = node(&w1, 7.072, n2, a(2));
    DecisionTree::new(8, 4, root).unwrap()
}

pub fn swimmer() -> DecisionTree {
    let a = |i| act(i, 14);
    let w: [[f64; 8]; 13] = [
        [-6.8, -0.2, 7.6, 4.3, -7.7, 3.4, 9.8, 1.1],
        [-8.4, 7.0, 3.0, 1.0, 1.5, 0.1, 7.5, -0.2],
        [-9.0, 5.7, -7.1, -9.9, 4.9, 2.9, -1.8, -6.6],
        [3.7, -4.1, -3.0, 4.3, -1.0, 3.7, -0.3, 2.5],
        [-0.4, 8.2, -9.3, -7.0, -8.2, -6.6, -8.1, -9.5],
        [6.3, 2.1, 1.0, 6.9, -6.0, -6.6, -7.1, -1.7],
        [6.2, 3.3, -3.6, -9.0, -2.1, -6.5, -8.0, 1.0],
        [-4.4, 5.8, -2.9, -0.1, -8.9, 4.5, -9.0, -5.4],
        [1.4, -3.5, -8.3, 6.3, 9.0, 7.8, -0.4, -5.1],
        [-1.2, 2.3, 3.2, -7.3, 1.8, -7.5, 4.4, 6.1],
        [-7.8, 8.0, -0.5, -5.4, 7.3, -5.2, 7.2, -1.5],
        [4.2, -6.7, -7.4, -5.5, 1.6, -1.1, -8.9, 5.7],
        [3.6, -2.4, -0.7, 4.4, -2.4, 0.0, 0.0, 0.0],
    ];
    let b = [-3.519, 4.132, 8.252, 3.955, -6.651, 0.115, 7.284, 2.605, 1.749, -1.853, -7.113, -1.611, 0.0];
    let n = |i: usize, t, f| node(&w[i - 1], b[i - 1], t, f);
    // built bottom-up along the decision list
    let n13 = n(13, a(13), a(6));
    let n12 = n(12, n13, a(6));
    let n11 = n(11, a(0), n12);
    let n10 = n(10, n11, a(2));
    let n9 = n(9, n10, a(1));
    let n8 = n(8, a(2), n9);
    let n7 = n(7, n8, a(8));
    let n6 = n(6, a(2), n7);
    let n5 = n(5, a(1), n6);
    let n4 = n(4, n5, a(7));
    let n3 = n(3, n4, a(1));
    let n2 = n(2, n3, a(13));
    let root = n(1, a(5), n2);
    DecisionTree::new(8, 14, root).unwrap()
}

pub fn reacher() -> DecisionTree {
    let w = [0.3, 9.3, 0.0, 0.0, -9.8, 5.1, 0.2, 1.1, -5.1, 0.0, 0.0];
    DecisionTree::new(11, 14, node(&w, 0.0, act(3, 14), act(9, 14))).unwrap()
}

pub fn hopper() -> DecisionTree {
    let a = |i| act(i, 21);
    let w1 = [0.0, 10.0, -7.4, 0.0, 6.9, 6.9, 0.0, 0.0, 0.0, 0.0, 0.0];
    let w2 = [0.0, 10.0, 0.0, 0.0, -6.8, 0.0, -6.0, 0.0, -4.2, 4.2, -7.4];
    let w3 = [0.0, 3.8, 0.0, 0.0, 5.2, 0.0, -8.2, 3.1, 0.0, -4.3, 0.0];
    let n3 = node(&w3, -0.5, a(6), a(20));
    let n2 = node(&w2, 1.5, a(12), n3);
    let root = node(&w1, 3.1, n2, a(15));
    DecisionTree::new(11, 21, root).unwrap()
}

pub fn walker2d() -> DecisionTree {
    let a = |i| act(i, 42);
    let w1 = [0.9, 8.4, 0.0, 5.9, 0.0, 0.0, 2.6, 5.7, -0.8, 5.7, 7.7, 0.0, -8.0, -0.9, -6.8, 0.0, 3.3];
    let w2 = [0.0, 0.0, 0.0, -9.2, 0.0, 0.0, 0.0, -8.5, 0.0, 0.0, -7.1, 3.8, 0.0, 0.0, 7.8, 0.0, 0.0];
    let n2 = node(&w2, 0.0, a(6), a(21));
    let root = node(&w1, 5.9, n2, a(13));
    DecisionTree::new(17, 42, root).unwrap()
}

pub fn published() -> Vec<(&'static str, DecisionTree)> {
    vec![
        ("inverted_pendulum", inverted_pendulum()),
        ("lunar_lander", lunar_lander()),
        ("swimmer", swimmer()),
        ("reacher", reacher()),
        ("hopper", hopper()),
        ("walker2d", walker2d()),
    ]
}
