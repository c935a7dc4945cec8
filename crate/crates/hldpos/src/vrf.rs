//! Elliptic-curve verifiable random function.
//!
//! Keygen, evaluation, and public verification over a short-Weierstrass
//! curve `y^2 = x^3 + ax + b (mod p)`, plus the hash-to-unit-interval map
//! used for sharding nodes into groups.
//!
//! The construction is Schnorr-style: evaluation derives a deterministic
//! nonce `r` from the secret key and the input, publishes the commitment
//! `R = r*G`, binds the challenge to `H(R || PK || input)`, and responds
//! with `s = r + c*v mod n`. The pseudorandom output is `H(s || input)`.
//! Verification checks `s*G == R + c*PK`, recomputes the challenge, and
//! recomputes the output. The challenge is stored and compared as the full
//! 256-bit digest so any single-bit mutation of the proof is rejected
//! deterministically even on small test curves.
//!
//! Not hardened: arithmetic is not constant time and there is no
//! side-channel resistance. The default curve is secp256k1; two small test
//! curves with prime-order subgroups are provided for exhaustive property
//! checks and fast simulation.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from curve validation and VRF operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum VrfError {
    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),
    #[error("input byte string must be nonempty")]
    EmptyInput,
}

/// A point on a short-Weierstrass curve, affine or the point at infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

/// Short-Weierstrass curve parameters with a prime-order base point.
///
/// `kappa = 2^iota` is the security parameter; `iota` controls the bit
/// length of the honest parameter choice and is carried for reporting, not
/// enforced against the curve size (test curves are deliberately small).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveParams {
    /// Prime field modulus.
    pub p: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    /// Base point; must lie on the curve and have prime order `order`.
    pub gx: BigUint,
    pub gy: BigUint,
    /// Prime order of the base point.
    pub order: BigUint,
    /// Security parameter exponent: kappa = 2^iota.
    pub iota: u32,
}

impl CurveParams {
    /// secp256k1: the widely deployed 256-bit prime-order curve.
    pub fn secp256k1() -> Self {
        let hex = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).unwrap();
        CurveParams {
            p: hex("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F"),
            a: BigUint::zero(),
            b: BigUint::from(7u32),
            gx: hex("79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798"),
            gy: hex("483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8"),
            order: hex("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141"),
            iota: 256,
        }
    }

    /// Small curve (32-bit field, prime subgroup of order ~2^29.4) for fast
    /// bulk property tests and simulation-scale key material.
    ///
    /// `y^2 = x^3 + 7` over `p = 4294967681` is supersingular (`p = 2 mod 3`)
    /// with `#E = p + 1 = 6 * 715827947` and cyclic group structure; the base
    /// point generates the prime-order-`q` subgroup.
    pub fn toy_medium() -> Self {
        CurveParams {
            p: BigUint::from(4_294_967_681u64),
            a: BigUint::zero(),
            b: BigUint::from(7u32),
            gx: BigUint::from(2_309_970_291u64),
            gy: BigUint::from(135_978_082u64),
            order: BigUint::from(715_827_947u64),
            iota: 30,
        }
    }

    /// Tiny curve (p = 29, subgroup order 5) for exhaustive edge cases such
    /// as the zero-scalar rejection loop in keygen.
    pub fn toy_tiny() -> Self {
        CurveParams {
            p: BigUint::from(29u32),
            a: BigUint::zero(),
            b: BigUint::from(7u32),
            gx: BigUint::from(6u32),
            gy: BigUint::from(22u32),
            order: BigUint::from(5u32),
            iota: 2,
        }
    }

    /// Checks the structural invariants: p and order prime, base point on
    /// the curve, non-singular discriminant, and `order * G = infinity`.
    pub fn validate(&self) -> Result<(), VrfError> {
        if self.p < BigUint::from(5u32) || !is_probable_prime(&self.p) {
            return Err(VrfError::InvalidParams("field modulus is not prime".into()));
        }
        if !is_probable_prime(&self.order) {
            return Err(VrfError::InvalidParams("group order is not prime".into()));
        }
        // 4a^3 + 27b^2 != 0 (mod p)
        let four_a3 = (BigUint::from(4u32) * self.a.modpow(&BigUint::from(3u32), &self.p)) % &self.p;
        let twenty7_b2 =
            (BigUint::from(27u32) * self.b.modpow(&BigUint::from(2u32), &self.p)) % &self.p;
        if (four_a3 + twenty7_b2) % &self.p == BigUint::zero() {
            return Err(VrfError::InvalidParams("singular curve discriminant".into()));
        }
        let g = self.base_point();
        if !self.is_on_curve(&g) {
            return Err(VrfError::InvalidParams("base point not on curve".into()));
        }
        if !self.mul(&self.order, &g).is_infinity() {
            return Err(VrfError::InvalidParams(
                "base point order does not match declared order".into(),
            ));
        }
        Ok(())
    }

    pub fn base_point(&self) -> Point {
        Point::Affine {
            x: self.gx.clone(),
            y: self.gy.clone(),
        }
    }

    pub fn is_on_curve(&self, point: &Point) -> bool {
        match point {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = (y * y) % &self.p;
                let rhs = (x * x % &self.p * x + &self.a * x + &self.b) % &self.p;
                lhs == rhs
            }
        }
    }

    fn field_sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        ((a + &self.p) - b) % &self.p
    }

    pub fn add(&self, lhs: &Point, rhs: &Point) -> Point {
        match (lhs, rhs) {
            (Point::Infinity, q) => q.clone(),
            (q, Point::Infinity) => q.clone(),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => {
                if x1 == x2 {
                    if (y1 + y2) % &self.p == BigUint::zero() {
                        return Point::Infinity;
                    }
                    return self.double(lhs);
                }
                let num = self.field_sub(y2, y1);
                let den = self.field_sub(x2, x1);
                let lambda = (num * mod_inverse(&den, &self.p).expect("nonzero denominator"))
                    % &self.p;
                self.chord(&lambda, x1, y1, x2)
            }
        }
    }

    pub fn double(&self, point: &Point) -> Point {
        match point {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => {
                if y.is_zero() {
                    return Point::Infinity;
                }
                let num = (BigUint::from(3u32) * x * x + &self.a) % &self.p;
                let den = (BigUint::from(2u32) * y) % &self.p;
                let lambda =
                    (num * mod_inverse(&den, &self.p).expect("nonzero denominator")) % &self.p;
                self.chord(&lambda, x, y, x)
            }
        }
    }

    fn chord(&self, lambda: &BigUint, x1: &BigUint, y1: &BigUint, x2: &BigUint) -> Point {
        let x3 = self.field_sub(&((lambda * lambda) % &self.p), &((x1 + x2) % &self.p));
        let y3 = self.field_sub(&((lambda * self.field_sub(x1, &x3)) % &self.p), y1);
        Point::Affine { x: x3, y: y3 }
    }

    /// Double-and-add scalar multiplication.
    pub fn mul(&self, scalar: &BigUint, point: &Point) -> Point {
        let mut acc = Point::Infinity;
        for i in (0..scalar.bits()).rev() {
            acc = self.double(&acc);
            if scalar.bit(i) {
                acc = self.add(&acc, point);
            }
        }
        acc
    }

    /// Fixed big-endian width of a field coordinate in bytes.
    pub fn coord_width(&self) -> usize {
        ((self.p.bits() + 7) / 8) as usize
    }

    /// Fixed big-endian width of a scalar in bytes.
    pub fn scalar_width(&self) -> usize {
        ((self.order.bits() + 7) / 8) as usize
    }

    pub fn encode_scalar(&self, s: &BigUint) -> Vec<u8> {
        pad_be(s, self.scalar_width())
    }

    /// Point encoding: one tag byte (0x00 infinity, 0x04 affine) followed by
    /// two fixed-width coordinates (zeroed for infinity).
    pub fn encode_point(&self, point: &Point) -> Vec<u8> {
        let w = self.coord_width();
        let mut out = Vec::with_capacity(1 + 2 * w);
        match point {
            Point::Infinity => out.extend(std::iter::repeat(0u8).take(1 + 2 * w)),
            Point::Affine { x, y } => {
                out.push(0x04);
                out.extend(pad_be(x, w));
                out.extend(pad_be(y, w));
            }
        }
        out
    }

    /// Decodes and validates a point; `None` for malformed encodings or
    /// coordinates off the curve.
    pub fn decode_point(&self, bytes: &[u8]) -> Option<Point> {
        let w = self.coord_width();
        if bytes.len() != 1 + 2 * w {
            return None;
        }
        match bytes[0] {
            0x00 => {
                if bytes[1..].iter().all(|&b| b == 0) {
                    Some(Point::Infinity)
                } else {
                    None
                }
            }
            0x04 => {
                let x = BigUint::from_bytes_be(&bytes[1..1 + w]);
                let y = BigUint::from_bytes_be(&bytes[1 + w..]);
                let point = Point::Affine { x, y };
                if self.is_on_curve(&point) {
                    Some(point)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

fn pad_be(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    assert!(raw.len() <= width, "value wider than field width");
    let mut out = vec![0u8; width - raw.len()];
    out.extend(raw);
    out
}

/// Modular inverse via extended Euclid; `None` when gcd(a, m) != 1.
pub fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, a % modulus);
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return None;
    }
    let mut x = ext.x % &m;
    if x.sign() == Sign::Minus {
        x += &m;
    }
    Some(x.to_biguint().expect("normalized to non-negative"))
}

/// Miller-Rabin with the deterministic witness set for u64-sized inputs and
/// the same fixed witnesses as a strong probabilistic check above that.
fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    let small: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &s in &small {
        let s = BigUint::from(s);
        if n == &s {
            return true;
        }
        if (n % &s).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let trailing = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> trailing;
    'witness: for &w in &small {
        let mut x = BigUint::from(w).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..trailing.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// SHA-256 over the concatenation of the given parts.
pub fn sha256_concat(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for part in parts {
        h.update(part);
    }
    h.finalize().into()
}

/// VRF keypair: secret scalar `v` in [1, order-1] and public point `v*G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: Point,
    secret: BigUint,
    iota: u32,
}

impl KeyPair {
    pub fn secret_scalar(&self) -> &BigUint {
        &self.secret
    }

    /// Deterministic serialization: secret scalar then encoded public point.
    pub fn to_bytes(&self, params: &CurveParams) -> Vec<u8> {
        let mut out = params.encode_scalar(&self.secret);
        out.extend(params.encode_point(&self.public));
        out
    }
}

/// Pseudorandom VRF output: `H(s || input)`, fixed 256-bit width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VrfOutput(pub [u8; 32]);

impl VrfOutput {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// Proof of correct VRF evaluation.
///
/// `challenge` is the full digest `H(R || PK || input)`; its reduction mod
/// the group order is the challenge scalar used in the response equation.
/// The per-evaluation nonce `r` itself is never exported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VrfProof {
    pub challenge: [u8; 32],
    pub response: BigUint,
    pub commitment: Point,
}

impl VrfProof {
    /// Fixed-width encoding: challenge || response scalar || commitment.
    pub fn to_bytes(&self, params: &CurveParams) -> Vec<u8> {
        let mut out = self.challenge.to_vec();
        out.extend(params.encode_scalar(&self.response));
        out.extend(params.encode_point(&self.commitment));
        out
    }

    pub fn from_bytes(params: &CurveParams, bytes: &[u8]) -> Option<Self> {
        let sw = params.scalar_width();
        let pw = 1 + 2 * params.coord_width();
        if bytes.len() != 32 + sw + pw {
            return None;
        }
        let mut challenge = [0u8; 32];
        challenge.copy_from_slice(&bytes[..32]);
        let response = BigUint::from_bytes_be(&bytes[32..32 + sw]);
        let commitment = params.decode_point(&bytes[32 + sw..])?;
        Some(VrfProof {
            challenge,
            response,
            commitment,
        })
    }

    pub fn to_hex(&self, params: &CurveParams) -> String {
        hex::encode(self.to_bytes(params))
    }
}

/// Derives a nonzero scalar in [1, order-1] by hashing `parts` with an
/// incrementing counter until the reduction is nonzero.
fn derive_nonzero_scalar(parts: &[&[u8]], order: &BigUint) -> BigUint {
    let mut counter: u32 = 0;
    loop {
        let mut h = Sha256::new();
        for part in parts {
            h.update(part);
        }
        h.update(counter.to_be_bytes());
        let digest: [u8; 32] = h.finalize().into();
        let v = BigUint::from_bytes_be(&digest) % order;
        if !v.is_zero() {
            return v;
        }
        counter += 1;
    }
}

/// Deterministic key generation from a seed byte string.
pub fn keygen(params: &CurveParams, seed: &[u8]) -> Result<KeyPair, VrfError> {
    params.validate()?;
    let secret = derive_nonzero_scalar(&[b"hldpos-vrf-keygen", seed], &params.order);
    let public = params.mul(&secret, &params.base_point());
    Ok(KeyPair {
        public,
        secret,
        iota: params.iota,
    })
}

/// Evaluates the VRF on `input`, returning the pseudorandom output and its
/// proof. Deterministic for a fixed (keypair, input): the nonce is derived
/// from the secret key and the input rather than sampled.
pub fn evaluate(
    params: &CurveParams,
    keypair: &KeyPair,
    input: &[u8],
) -> Result<(VrfOutput, VrfProof), VrfError> {
    if input.is_empty() {
        return Err(VrfError::EmptyInput);
    }
    let secret_bytes = params.encode_scalar(&keypair.secret);
    let nonce = derive_nonzero_scalar(&[&secret_bytes, input, b"nonce"], &params.order);
    let commitment = params.mul(&nonce, &params.base_point());
    let challenge = sha256_concat(&[
        &params.encode_point(&commitment),
        &params.encode_point(&keypair.public),
        input,
    ]);
    let challenge_scalar = BigUint::from_bytes_be(&challenge) % &params.order;
    let response = (nonce + challenge_scalar * &keypair.secret) % &params.order;
    let output = sha256_concat(&[&params.encode_scalar(&response), input]);
    Ok((
        VrfOutput(output),
        VrfProof {
            challenge,
            response,
            commitment,
        },
    ))
}

/// Publicly verifies an (output, proof) pair against a public key.
///
/// Accepts iff the challenge matches `H(R || PK || input)`, the response
/// satisfies `s*G == R + c*PK`, and the output equals `H(s || input)`.
/// Malformed points or out-of-range scalars reject rather than error.
pub fn verify(
    params: &CurveParams,
    public_key: &Point,
    input: &[u8],
    output: &VrfOutput,
    proof: &VrfProof,
) -> bool {
    if input.is_empty() {
        return false;
    }
    if public_key.is_infinity() || !params.is_on_curve(public_key) {
        return false;
    }
    if proof.commitment.is_infinity() || !params.is_on_curve(&proof.commitment) {
        return false;
    }
    if proof.response >= params.order {
        return false;
    }
    let expected_challenge = sha256_concat(&[
        &params.encode_point(&proof.commitment),
        &params.encode_point(public_key),
        input,
    ]);
    if proof.challenge != expected_challenge {
        return false;
    }
    let challenge_scalar = BigUint::from_bytes_be(&proof.challenge) % &params.order;
    let lhs = params.mul(&proof.response, &params.base_point());
    let rhs = params.add(
        &proof.commitment,
        &params.mul(&challenge_scalar, public_key),
    );
    if lhs != rhs {
        return false;
    }
    let expected_output = sha256_concat(&[&params.encode_scalar(&proof.response), input]);
    output.0 == expected_output
}

/// Maps arbitrary bytes to [0, 1) by hashing with SHA-256 and dividing the
/// digest, read as a big-endian integer, by 2^256.
///
/// The result is truncated to the top 53 bits (f64 mantissa precision), so
/// the value is always strictly below 1.
pub fn hash_to_unit(bytes: &[u8]) -> f64 {
    let digest = sha256_concat(&[bytes]);
    let top = u64::from_be_bytes(digest[..8].try_into().unwrap());
    (top >> 11) as f64 / (1u64 << 53) as f64
}
