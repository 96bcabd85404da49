//! From-scratch AES-128 used as an independent oracle for the crate's
//! cipher. The S-box is derived from field inversion rather than copied.

#![allow(dead_code)]

use std::sync::OnceLock;

fn xtime(a: u8) -> u8 {
    (a << 1) ^ if a & 0x80 != 0 { 0x1b } else { 0 }
}

fn gmul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    p
}

pub fn sbox() -> [u8; 256] {
    static SBOX: OnceLock<[u8; 256]> = OnceLock::new();
    *SBOX.get_or_init(build_sbox)
}

fn build_sbox() -> [u8; 256] {
    let mut s = [0u8; 256];
    for (i, out) in s.iter_mut().enumerate() {
        let x = i as u8;
        let inv = if x == 0 {
            0
        } else {
            (1..=255u8).find(|&y| gmul(x, y) == 1).unwrap()
        };
        let mut b = inv;
        for shift in 1..=4 {
            b ^= inv.rotate_left(shift);
        }
        *out = b ^ 0x63;
    }
    s
}

fn inv_sbox(s: &[u8; 256]) -> [u8; 256] {
    let mut inv = [0u8; 256];
    for (i, &v) in s.iter().enumerate() {
        inv[v as usize] = i as u8;
    }
    inv
}

fn expand_key(key: &[u8; 16], s: &[u8; 256]) -> [[u8; 16]; 11] {
    let mut w = [[0u8; 4]; 44];
    for i in 0..4 {
        w[i].copy_from_slice(&key[4 * i..4 * i + 4]);
    }
    let mut rcon = 1u8;
    for i in 4..44 {
        let mut t = w[i - 1];
        if i % 4 == 0 {
            t = [s[t[1] as usize] ^ rcon, s[t[2] as usize], s[t[3] as usize], s[t[0] as usize]];
            rcon = xtime(rcon);
        }
        for j in 0..4 {
            w[i][j] = w[i - 4][j] ^ t[j];
        }
    }
    let mut rk = [[0u8; 16]; 11];
    for r in 0..11 {
        for c in 0..4 {
            rk[r][4 * c..4 * c + 4].copy_from_slice(&w[4 * r + c]);
        }
    }
    rk
}

// State is column-major: byte index = 4 * column + row.
fn shift_rows(st: &mut [u8; 16], inverse: bool) {
    let old = *st;
    for r in 1..4 {
        for c in 0..4 {
            let src = if inverse { (c + 4 - r) % 4 } else { (c + r) % 4 };
            st[4 * c + r] = old[4 * src + r];
        }
    }
}

fn mix_columns(st: &mut [u8; 16], m: [u8; 4]) {
    for c in 0..4 {
        let col = [st[4 * c], st[4 * c + 1], st[4 * c + 2], st[4 * c + 3]];
        for r in 0..4 {
            st[4 * c + r] = (0..4).fold(0, |acc, k| acc ^ gmul(m[(k + 4 - r) % 4], col[k]));
        }
    }
}

fn add(st: &mut [u8; 16], k: &[u8; 16]) {
    st.iter_mut().zip(k).for_each(|(a, b)| *a ^= b);
}

pub fn encrypt_block(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let s = sbox();
    let rk = expand_key(key, &s);
    let mut st = *block;
    add(&mut st, &rk[0]);
    for (round, k) in rk.iter().enumerate().skip(1) {
        st.iter_mut().for_each(|b| *b = s[*b as usize]);
        shift_rows(&mut st, false);
        if round != 10 {
            mix_columns(&mut st, [2, 3, 1, 1]);
        }
        add(&mut st, k);
    }
    st
}

pub fn decrypt_block(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let s = sbox();
    let inv = inv_sbox(&s);
    let rk = expand_key(key, &s);
    let mut st = *block;
    add(&mut st, &rk[10]);
    for round in (0..10).rev() {
        shift_rows(&mut st, true);
        st.iter_mut().for_each(|b| *b = inv[*b as usize]);
        add(&mut st, &rk[round]);
        if round != 0 {
            mix_columns(&mut st, [14, 11, 13, 9]);
        }
    }
    st
}

pub fn oracle_ecb(key: &[u8; 16], plain: &[u8]) -> Vec<u8> {
    let n = 16 - plain.len() % 16;
    let mut padded = plain.to_vec();
    padded.resize(plain.len() + n, n as u8);
    padded
        .chunks(16)
        .flat_map(|c| encrypt_block(key, c.try_into().unwrap()))
        .collect()
}
