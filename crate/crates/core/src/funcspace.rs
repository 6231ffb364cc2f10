//! Complex-valued functions on a finite abelian group with the uniform
//! probability measure.
//!
//! A [`FunctionTable`] stores one value per group element in the dense
//! mixed-radix layout of [`GroupSpec`]. Translation follows
//! `(T^g f)(x) = f(x - g)`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rand::Rng;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::arith::{mobius_sieve, DEFAULT_SIEVE_CAP};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, Subgroup};
use crate::sampling::draw_rng;
use crate::scalar::{turn, Real};

/// Dense table of a function `G -> C`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable<T: Real> {
    group: GroupSpec,
    values: Vec<Complex<T>>,
}

impl<T: Real> FunctionTable<T> {
    pub fn new(group: GroupSpec, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != group.len() {
            return Err(Error::structural(format!(
                "table has {} values but {} has order {}",
                values.len(),
                group,
                group.order()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::argument("function values must be finite"));
        }
        Ok(FunctionTable { group, values })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(group: GroupSpec, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), group.len());
        FunctionTable { group, values }
    }

    pub fn from_index_fn(group: &GroupSpec, f: impl Fn(usize) -> Complex<T>) -> Result<Self> {
        Self::new(group.clone(), (0..group.len()).map(f).collect())
    }

    pub fn from_fn(group: &GroupSpec, f: impl Fn(&GroupElement) -> Complex<T>) -> Result<Self> {
        Self::new(group.clone(), group.elements().map(|e| f(&e)).collect())
    }

    pub fn from_real(group: &GroupSpec, values: &[f64]) -> Result<Self> {
        Self::new(
            group.clone(),
            values.iter().map(|&v| Complex::new(T::of(v), T::zero())).collect(),
        )
    }

    pub fn constant(group: &GroupSpec, c: Complex<T>) -> Self {
        Self::from_parts(group.clone(), vec![c; group.len()])
    }

    pub fn ones(group: &GroupSpec) -> Self {
        Self::constant(group, Complex::new(T::one(), T::zero()))
    }

    pub fn zeros(group: &GroupSpec) -> Self {
        Self::constant(group, Complex::new(T::zero(), T::zero()))
    }

    /// Indicator of a single element.
    pub fn dirac(group: &GroupSpec, at: &GroupElement) -> Result<Self> {
        let i = group.index_of(at)?;
        let mut t = Self::zeros(group);
        t.values[i] = Complex::new(T::one(), T::zero());
        Ok(t)
    }

    /// `chi_xi(x) = e(sum_j x_j xi_j / N_j)`.
    pub fn character(group: &GroupSpec, xi: &GroupElement) -> Result<Self> {
        group.check(xi)?;
        let moduli = group.moduli().to_vec();
        Ok(Self::from_parts(
            group.clone(),
            group
                .elements()
                .map(|x| turn(character_phase(&moduli, &x, xi)))
                .collect(),
        ))
    }

    /// `e(a x^2 / N)` on a cyclic group.
    pub fn quadratic_phase(group: &GroupSpec, a: i64) -> Result<Self> {
        if !group.is_cyclic() {
            return Err(Error::argument("quadratic phases are defined on cyclic groups"));
        }
        let n = group.order() as i128;
        Ok(Self::from_parts(
            group.clone(),
            (0..n)
                .map(|x| {
                    let r = (a as i128 * x * x).rem_euclid(n);
                    turn(r as f64 / n as f64)
                })
                .collect(),
        ))
    }

    /// Independent uniform signs.
    pub fn random_signs(group: &GroupSpec, seed: u64) -> Self {
        let mut rng = draw_rng(seed, 0);
        Self::from_parts(
            group.clone(),
            (0..group.len())
                .map(|_| {
                    let s = if rng.gen::<bool>() { T::one() } else { -T::one() };
                    Complex::new(s, T::zero())
                })
                .collect(),
        )
    }

    /// Real and imaginary parts independent uniform on `[-1, 1]`.
    pub fn random_complex(group: &GroupSpec, seed: u64) -> Self {
        let mut rng = draw_rng(seed, 0);
        Self::from_parts(
            group.clone(),
            (0..group.len())
                .map(|_| Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0))))
                .collect(),
        )
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: &GroupElement) -> Result<Complex<T>> {
        Ok(self.values[self.group.index_of(x)?])
    }

    fn same_group(&self, other: &FunctionTable<T>) -> Result<()> {
        if self.group != other.group {
            return Err(Error::structural(format!(
                "tables on {} and {}",
                self.group, other.group
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self::from_parts(self.group.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(
        &self,
        other: &FunctionTable<T>,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        self.same_group(other)?;
        Ok(Self::from_parts(
            self.group.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &FunctionTable<T>) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FunctionTable<T>) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &FunctionTable<T>) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// `(T^g f)(x) = f(x - g)`.
    pub fn shift(&self, g: &GroupElement) -> Result<Self> {
        self.group.check(g)?;
        Ok(self.shift_unchecked(g))
    }

    pub(crate) fn shift_unchecked(&self, g: &GroupElement) -> Self {
        let map = self.group.translation_map(&self.group.neg_unchecked(g));
        Self::from_parts(self.group.clone(), map.iter().map(|&y| self.values[y]).collect())
    }

    /// `Delta_{h,h'} f = (T^h f) * conj(T^{h'} f)`.
    pub fn delta(&self, h: &GroupElement, h2: &GroupElement) -> Result<Self> {
        let a = self.shift(h)?;
        let b = self.shift(h2)?;
        a.zip_with(&b, |x, y| x * y.conj())
    }

    /// `f * conj(T^k f)` for the element with index `k`.
    pub(crate) fn delta_from_zero(&self, k: usize) -> Self {
        if k == 0 {
            return self.map(|v| Complex::new(v.norm_sqr(), T::zero()));
        }
        let n = self.group.len();
        let values = if self.group.is_cyclic() {
            (0..n)
                .map(|x| self.values[x] * self.values[(x + n - k) % n].conj())
                .collect()
        } else {
            let neg = self.group.neg_unchecked(&self.group.element_of(k));
            let map = self.group.translation_map(&neg);
            (0..n)
                .map(|x| self.values[x] * self.values[map[x]].conj())
                .collect()
        };
        Self::from_parts(self.group.clone(), values)
    }

    /// `E_x f(x)`.
    pub fn mean(&self) -> Complex<T> {
        let s = self
            .values
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b);
        s / T::of_count(self.values.len() as u64)
    }

    /// `<f, g> = E_x f(x) conj(g(x))`.
    pub fn inner(&self, other: &FunctionTable<T>) -> Result<Complex<T>> {
        self.same_group(other)?;
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Complex::new(T::zero(), T::zero()), |a, (&x, &y)| a + x * y.conj());
        Ok(s / T::of_count(self.values.len() as u64))
    }

    /// `(E_x |f(x)|^p)^{1/p}`; `p = inf` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> T {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let s = self
            .values
            .iter()
            .fold(T::zero(), |a, v| a + v.norm().powf(T::of(p)));
        (s / T::of_count(self.values.len() as u64)).powf(T::of(1.0 / p))
    }

    pub fn l2_norm(&self) -> T {
        let s = self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr());
        (s / T::of_count(self.values.len() as u64)).sqrt()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    /// Largest pointwise distance to another table.
    pub fn max_abs_diff(&self, other: &FunctionTable<T>) -> Result<T> {
        self.same_group(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |a, (&x, &y)| a.max((x - y).norm())))
    }

    /// Fourier coefficients `f^(xi) = E_x f(x) conj(chi_xi(x))`.
    pub fn dft(&self) -> Spectrum<T> {
        let mut buf = self.values.clone();
        transform_axes(&self.group, &mut buf, FftDirection::Forward);
        let scale = T::one() / T::of_count(self.group.order());
        for v in &mut buf {
            *v = *v * scale;
        }
        Spectrum {
            group: self.group.clone(),
            coefficients: buf,
        }
    }

    /// `E(f | X^H)`: averages over the cosets `x + H`.
    pub fn invariant_projection(&self, h: &Subgroup) -> Result<Self> {
        if h.group() != &self.group {
            return Err(Error::structural("subgroup of a different group"));
        }
        let n = self.group.len();
        let hs = h.indices();
        let weight = T::of_count(hs.len() as u64);
        let mut out: Vec<Option<Complex<T>>> = vec![None; n];
        let mut coset = Vec::with_capacity(hs.len());
        for x in 0..n {
            if out[x].is_some() {
                continue;
            }
            coset.clear();
            coset.extend(hs.iter().map(|&a| self.group.add_indices(x, a)));
            let avg = coset
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |a, &y| a + self.values[y])
                / weight;
            for &y in &coset {
                out[y] = Some(avg);
            }
        }
        Ok(Self::from_parts(
            self.group.clone(),
            out.into_iter().map(|v| v.expect("every coset visited")).collect(),
        ))
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> FunctionTable<U> {
        FunctionTable::from_parts(
            self.group.clone(),
            self.values
                .iter()
                .map(|v| Complex::new(U::of(v.re.as_f64()), U::of(v.im.as_f64())))
                .collect(),
        )
    }

    /// Writes the interleaved little-endian `f64` pairs to `path` and the
    /// sidecar `{"group": [...], "length": n}` next to it.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.as_f64().to_le_bytes());
            bytes.extend_from_slice(&v.im.as_f64().to_le_bytes());
        }
        let sidecar = TableSidecar {
            group: self.group.moduli().to_vec(),
            length: self.values.len() as u64,
        };
        let json = serde_json::to_vec_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
        write_atomic(path, &bytes)?;
        write_atomic(&sidecar_path(path), &json)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let side: TableSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)
            .map_err(|e| Error::Format(format!("sidecar: {e}")))?;
        let group = GroupSpec::new(side.group)?;
        if side.length != group.order() {
            return Err(Error::Format(format!(
                "sidecar length {} does not match group order {}",
                side.length,
                group.order()
            )));
        }
        let bytes = fs::read(path)?;
        if bytes.len() as u64 != side.length * 16 {
            return Err(Error::Format(format!(
                "expected {} bytes, found {}",
                side.length * 16,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex::new(T::of(re), T::of(im))
            })
            .collect();
        Self::new(group, values)
    }

    /// `index,re,im` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", i, v.re.as_f64(), v.im.as_f64()));
        }
        s
    }
}

impl FunctionTable<f64> {
    /// `mu(x)` for `1 <= x <= n` on `Z/(embed_factor * n)`, zero elsewhere.
    pub fn mobius(n: u64, embed_factor: u64) -> Result<Self> {
        mobius_table(n, embed_factor, DEFAULT_SIEVE_CAP)
    }
}

/// Möbius function of `1..=n` embedded in `Z/(embed_factor * n)`.
pub fn mobius_table<T: Real>(n: u64, embed_factor: u64, sieve_cap: u64) -> Result<FunctionTable<T>> {
    if n == 0 || embed_factor == 0 {
        return Err(Error::argument("N and the embedding factor must be at least 1"));
    }
    let mu = mobius_sieve(n, sieve_cap)?;
    let order = n
        .checked_mul(embed_factor)
        .ok_or_else(|| Error::argument("embedded group order overflows"))?;
    let group = GroupSpec::cyclic(order)?;
    let mut values = vec![Complex::new(T::zero(), T::zero()); group.len()];
    for x in 1..=n as usize {
        values[x % group.len()] = Complex::new(T::of(mu[x] as f64), T::zero());
    }
    Ok(FunctionTable::from_parts(group, values))
}

pub(crate) fn character_phase(moduli: &[u64], x: &GroupElement, xi: &GroupElement) -> f64 {
    moduli
        .iter()
        .zip(x.residues().iter().zip(xi.residues()))
        .map(|(&m, (&a, &b))| ((a as u128 * b as u128) % m as u128) as f64 / m as f64)
        .sum()
}

#[derive(Serialize, Deserialize)]
struct TableSidecar {
    group: Vec<u64>,
    length: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::argument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Fourier coefficients indexed by characters `xi` in the same layout as
/// the group.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    group: GroupSpec,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(group: GroupSpec, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.len() != group.len() {
            return Err(Error::structural("spectrum length differs from group order"));
        }
        Ok(Spectrum {
            group,
            coefficients,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn at(&self, xi: &GroupElement) -> Result<Complex<T>> {
        Ok(self.coefficients[self.group.index_of(xi)?])
    }

    /// `f(x) = sum_xi f^(xi) chi_xi(x)`.
    pub fn idft(&self) -> FunctionTable<T> {
        let mut buf = self.coefficients.clone();
        transform_axes(&self.group, &mut buf, FftDirection::Inverse);
        FunctionTable::from_parts(self.group.clone(), buf)
    }

    /// `sum_xi |f^(xi)|^p`.
    pub fn power_sum(&self, p: f64) -> T {
        self.coefficients
            .iter()
            .fold(T::zero(), |a, c| a + c.norm().powf(T::of(p)))
    }

    /// `sum_xi |c_xi|`.
    pub fn l1_mass(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |a, c| a + c.norm())
    }
}

/// In-place unnormalized DFT along every cyclic factor.
fn transform_axes<T: Real>(group: &GroupSpec, buf: &mut [Complex<T>], direction: FftDirection) {
    let mut planner = FftPlanner::<T>::new();
    let moduli = group.moduli();
    let n = buf.len();
    let mut stride = 1usize;
    for axis in (0..moduli.len()).rev() {
        let len = moduli[axis] as usize;
        if len > 1 {
            let fft = planner.plan_fft(len, direction);
            let block = len * stride;
            let mut line = vec![Complex::new(T::zero(), T::zero()); len];
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
            for start in (0..n).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        buf[base + j * stride] = *v;
                    }
                }
            }
        }
        stride *= len;
    }
}
