"""Bit-exact NIfTI-1 reading and writing (.nii, .nii.gz), single-file format only.

The 348-byte header is decoded with endianness auto-detection; data is scaled
to float64 via scl_slope/scl_inter. NIfTI-2 files are rejected explicitly.
"""

from __future__ import annotations

import gzip
import math
import os
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadMagic,
    ExtentMismatch,
    InconsistentBitpix,
    InvalidHeader,
    IoError,
    Nifti2Unsupported,
    NonFiniteData,
    TruncatedHeader,
    UnsupportedDatatype,
    UnsupportedDimensionality,
)
from .volume import Mask3D, Modality, Volume3D

HEADER_SIZE = 348
NIFTI2_HEADER_SIZE = 540
MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIR = b"ni1\x00"
GZIP_MAGIC = b"\x1f\x8b"

# field layout of the NIfTI-1 header, in struct-module syntax
_HEADER_FIELDS = [
    ("i", "sizeof_hdr"),
    ("10s", "data_type"),
    ("18s", "db_name"),
    ("i", "extents"),
    ("h", "session_error"),
    ("b", "regular"),
    ("b", "dim_info"),
    ("8h", "dim"),
    ("f", "intent_p1"),
    ("f", "intent_p2"),
    ("f", "intent_p3"),
    ("h", "intent_code"),
    ("h", "datatype"),
    ("h", "bitpix"),
    ("h", "slice_start"),
    ("8f", "pixdim"),
    ("f", "vox_offset"),
    ("f", "scl_slope"),
    ("f", "scl_inter"),
    ("h", "slice_end"),
    ("b", "slice_code"),
    ("b", "xyzt_units"),
    ("f", "cal_max"),
    ("f", "cal_min"),
    ("f", "slice_duration"),
    ("f", "toffset"),
    ("i", "glmax"),
    ("i", "glmin"),
    ("80s", "descrip"),
    ("24s", "aux_file"),
    ("h", "qform_code"),
    ("h", "sform_code"),
    ("f", "quatern_b"),
    ("f", "quatern_c"),
    ("f", "quatern_d"),
    ("f", "qoffset_x"),
    ("f", "qoffset_y"),
    ("f", "qoffset_z"),
    ("4f", "srow_x"),
    ("4f", "srow_y"),
    ("4f", "srow_z"),
    ("16s", "intent_name"),
    ("4s", "magic"),
]
_HEADER_FORMAT = "".join(fmt for fmt, _ in _HEADER_FIELDS)
assert struct.calcsize("<" + _HEADER_FORMAT) == HEADER_SIZE

# datatype code -> (numpy dtype char, bitpix)
DATATYPES = {
    2: ("u1", 8),  # uint8
    4: ("i2", 16),  # int16
    8: ("i4", 32),  # int32
    16: ("f4", 32),  # float32
    64: ("f8", 64),  # float64
}


@dataclass(frozen=True)
class NiftiHeader:
    """Decoded NIfTI-1 header fields needed for round-trip I/O.

    `endian` is '<' or '>' as detected from sizeof_hdr; writing always emits
    little-endian regardless.
    """

    sizeof_hdr: int
    dim: tuple[int, ...]
    datatype_code: int
    bitpix: int
    pixdim: tuple[float, ...]
    vox_offset: float
    scl_slope: float
    scl_inter: float
    qform_code: int
    sform_code: int
    quatern: tuple[float, float, float]
    qoffset: tuple[float, float, float]
    srow_x: tuple[float, float, float, float]
    srow_y: tuple[float, float, float, float]
    srow_z: tuple[float, float, float, float]
    magic: bytes
    endian: str = "<"

    @property
    def extents(self) -> tuple[int, int, int]:
        return (self.dim[1], self.dim[2], self.dim[3])

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.pixdim[1], self.pixdim[2], self.pixdim[3])

    def affine(self) -> np.ndarray:
        """Voxel-to-world affine: sform if set, else decoded qform, else diagonal pixdim."""
        if self.sform_code > 0:
            return np.array(
                [self.srow_x, self.srow_y, self.srow_z, (0.0, 0.0, 0.0, 1.0)],
                dtype=np.float64,
            )
        if self.qform_code > 0:
            return self._qform_affine()
        aff = np.eye(4)
        aff[0, 0], aff[1, 1], aff[2, 2] = self.spacing
        return aff

    def _qform_affine(self) -> np.ndarray:
        b, c, d = (float(v) for v in self.quatern)
        a2 = 1.0 - (b * b + c * c + d * d)
        a = math.sqrt(a2) if a2 > 0 else 0.0
        rot = np.array(
            [
                [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
                [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
                [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
            ]
        )
        qfac = -1.0 if self.pixdim[0] < 0 else 1.0
        sx, sy, sz = self.spacing
        aff = np.eye(4)
        aff[:3, 0] = rot[:, 0] * sx
        aff[:3, 1] = rot[:, 1] * sy
        aff[:3, 2] = rot[:, 2] * sz * qfac
        aff[:3, 3] = self.qoffset
        return aff

    def as_dict(self) -> dict:
        return {
            "sizeof_hdr": self.sizeof_hdr,
            "dim": list(self.dim),
            "datatype_code": self.datatype_code,
            "bitpix": self.bitpix,
            "pixdim": list(self.pixdim),
            "vox_offset": self.vox_offset,
            "scl_slope": self.scl_slope,
            "scl_inter": self.scl_inter,
            "qform_code": self.qform_code,
            "sform_code": self.sform_code,
            "srow_x": list(self.srow_x),
            "srow_y": list(self.srow_y),
            "srow_z": list(self.srow_z),
            "magic": self.magic.rstrip(b"\x00").decode("ascii", "replace"),
            "endian": "big" if self.endian == ">" else "little",
        }


def parse_header(buf: bytes) -> NiftiHeader:
    """Decode a NIfTI-1 header from raw bytes, auto-detecting endianness.

    Raises TruncatedHeader, Nifti2Unsupported, BadMagic, UnsupportedDatatype,
    InconsistentBitpix, UnsupportedDimensionality, or InvalidHeader.
    """
    if len(buf) < HEADER_SIZE:
        raise TruncatedHeader(f"need {HEADER_SIZE} header bytes, got {len(buf)}")
    endian = None
    for cand in ("<", ">"):
        (size,) = struct.unpack(cand + "i", buf[:4])
        if size == HEADER_SIZE:
            endian = cand
            break
        if size == NIFTI2_HEADER_SIZE:
            raise Nifti2Unsupported("file is NIfTI-2; this toolkit reads NIfTI-1 only")
    if endian is None:
        raise BadMagic("sizeof_hdr is not 348 in either byte order; not a NIfTI-1 header")

    values = struct.unpack(endian + _HEADER_FORMAT, buf[:HEADER_SIZE])
    fields = {}
    pos = 0
    for fmt, name in _HEADER_FIELDS:
        n = 1 if fmt[-1] == "s" else (int(fmt[:-1]) if len(fmt) > 1 else 1)
        fields[name] = values[pos] if n == 1 else values[pos : pos + n]
        pos += n

    magic = fields["magic"]
    if magic not in (MAGIC_SINGLE, MAGIC_PAIR):
        raise BadMagic(f"bad magic {magic!r}; expected 'n+1' or 'ni1'")

    datatype = fields["datatype"]
    if datatype not in DATATYPES:
        raise UnsupportedDatatype(
            f"datatype code {datatype} unsupported (supported: {sorted(DATATYPES)})"
        )
    if fields["bitpix"] != DATATYPES[datatype][1]:
        raise InconsistentBitpix(
            f"bitpix {fields['bitpix']} inconsistent with datatype {datatype} "
            f"(expected {DATATYPES[datatype][1]})"
        )

    dim = tuple(int(d) for d in fields["dim"])
    if dim[0] not in (3, 4):
        raise UnsupportedDimensionality(f"dim[0] must be 3 or 4, got {dim[0]}")
    if any(d < 1 for d in dim[1:4]):
        raise UnsupportedDimensionality(f"extents must be >= 1, got {dim[1:4]}")
    if dim[0] == 4 and dim[4] != 1:
        raise UnsupportedDimensionality(
            f"multi-frame files are not supported (dim[4]={dim[4]}); only singleton 4th dims"
        )

    pixdim = tuple(float(p) for p in fields["pixdim"])
    if any(p <= 0 for p in pixdim[1:4]):
        raise InvalidHeader(f"pixdim[1..3] must be positive, got {pixdim[1:4]}")

    return NiftiHeader(
        sizeof_hdr=int(fields["sizeof_hdr"]),
        dim=dim,
        datatype_code=int(datatype),
        bitpix=int(fields["bitpix"]),
        pixdim=pixdim,
        vox_offset=float(fields["vox_offset"]),
        scl_slope=float(fields["scl_slope"]),
        scl_inter=float(fields["scl_inter"]),
        qform_code=int(fields["qform_code"]),
        sform_code=int(fields["sform_code"]),
        quatern=(
            float(fields["quatern_b"]),
            float(fields["quatern_c"]),
            float(fields["quatern_d"]),
        ),
        qoffset=(
            float(fields["qoffset_x"]),
            float(fields["qoffset_y"]),
            float(fields["qoffset_z"]),
        ),
        srow_x=tuple(float(v) for v in fields["srow_x"]),
        srow_y=tuple(float(v) for v in fields["srow_y"]),
        srow_z=tuple(float(v) for v in fields["srow_z"]),
        magic=bytes(magic),
        endian=endian,
    )


def _read_bytes(path) -> bytes:
    try:
        with open(path, "rb") as f:
            head = f.read(2)
            f.seek(0)
            if head == GZIP_MAGIC:
                with gzip.open(f) as gz:
                    return gz.read()
            return f.read()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e


def read_volume(
    path, modality: Modality | str | None = None
) -> tuple[Volume3D, NiftiHeader]:
    """Read a .nii or .nii.gz file into a float64 Volume3D plus its decoded header.

    Intensities are raw*scl_slope + scl_inter (scl_slope of 0 means unscaled,
    per the NIfTI convention). The modality hint comes from the argument, else
    the VOXPREP_MODALITY environment variable, else Unknown.
    """
    raw = _read_bytes(path)
    header = parse_header(raw)
    if header.magic == MAGIC_PAIR:
        raise IoError(f"{path}: detached .hdr/.img pairs are not supported, single-file only")

    nx, ny, nz = header.extents
    count = nx * ny * nz
    dt_char, bits = DATATYPES[header.datatype_code]
    itemsize = bits // 8
    offset = int(header.vox_offset)
    if offset < HEADER_SIZE:
        raise InvalidHeader(f"vox_offset {offset} before end of header")
    end = offset + count * itemsize
    if len(raw) < end:
        raise IoError(f"{path}: data truncated (need {end} bytes, have {len(raw)})")

    arr = np.frombuffer(raw, dtype=np.dtype(header.endian + dt_char), count=count, offset=offset)
    data = arr.reshape((nx, ny, nz), order="F").astype(np.float64)

    slope, inter = header.scl_slope, header.scl_inter
    if slope == 0.0:
        slope, inter = 1.0, 0.0
    if not (slope == 1.0 and inter == 0.0):
        data = data * slope + inter
    if not np.isfinite(data).all():
        raise NonFiniteData(f"{path}: voxel data contains NaN or infinity")

    if modality is None:
        modality = os.environ.get("VOXPREP_MODALITY")
    if not isinstance(modality, Modality):
        modality = Modality.from_string(modality)

    vol = Volume3D(data, header.spacing, header.affine(), modality)
    return vol, header


def default_header(vol: Volume3D, datatype_code: int = 64) -> NiftiHeader:
    """Minimal single-file header describing a volume's grid (sform from the affine)."""
    if datatype_code not in DATATYPES:
        raise UnsupportedDatatype(f"datatype code {datatype_code} unsupported")
    aff = vol.affine
    return NiftiHeader(
        sizeof_hdr=HEADER_SIZE,
        dim=(3, *vol.extents, 1, 1, 1, 1),
        datatype_code=datatype_code,
        bitpix=DATATYPES[datatype_code][1],
        pixdim=(1.0, *vol.spacing, 0.0, 0.0, 0.0, 0.0),
        vox_offset=352.0,
        scl_slope=1.0,
        scl_inter=0.0,
        qform_code=0,
        sform_code=1,
        quatern=(0.0, 0.0, 0.0),
        qoffset=(0.0, 0.0, 0.0),
        srow_x=tuple(aff[0]),
        srow_y=tuple(aff[1]),
        srow_z=tuple(aff[2]),
        magic=MAGIC_SINGLE,
        endian="<",
    )


def _pack_header(h: NiftiHeader) -> bytes:
    values = []
    fill = {
        "data_type": b"",
        "db_name": b"",
        "extents": 0,
        "session_error": 0,
        "regular": ord("r"),
        "dim_info": 0,
        "intent_p1": 0.0,
        "intent_p2": 0.0,
        "intent_p3": 0.0,
        "intent_code": 0,
        "slice_start": 0,
        "slice_end": 0,
        "slice_code": 0,
        "xyzt_units": 2,  # mm
        "cal_max": 0.0,
        "cal_min": 0.0,
        "slice_duration": 0.0,
        "toffset": 0.0,
        "glmax": 0,
        "glmin": 0,
        "descrip": b"voxprep",
        "aux_file": b"",
        "intent_name": b"",
    }
    named = {
        "sizeof_hdr": HEADER_SIZE,
        "dim": h.dim,
        "datatype": h.datatype_code,
        "bitpix": h.bitpix,
        "pixdim": h.pixdim,
        "vox_offset": h.vox_offset,
        "scl_slope": h.scl_slope,
        "scl_inter": h.scl_inter,
        "qform_code": h.qform_code,
        "sform_code": h.sform_code,
        "quatern_b": h.quatern[0],
        "quatern_c": h.quatern[1],
        "quatern_d": h.quatern[2],
        "qoffset_x": h.qoffset[0],
        "qoffset_y": h.qoffset[1],
        "qoffset_z": h.qoffset[2],
        "srow_x": h.srow_x,
        "srow_y": h.srow_y,
        "srow_z": h.srow_z,
        "magic": h.magic,
    }
    for fmt, name in _HEADER_FIELDS:
        v = named.get(name, fill.get(name))
        if fmt[-1] == "s" or (len(fmt) == 1):
            values.append(v)
        else:
            values.extend(v)
    return struct.pack("<" + _HEADER_FORMAT, *values)


def write_volume(
    vol: Volume3D,
    path,
    header_template: NiftiHeader | None = None,
    regenerate: bool = False,
) -> None:
    """Write a volume as single-file NIfTI-1 (gzip when the path ends in .gz).

    The template fixes datatype and intensity scaling; geometry fields always
    come from the volume. Without `regenerate`, template extents must match.
    Float64 output round-trips exactly; integer datatypes quantize to one
    scaling quantum via the template's scl_slope.
    """
    if header_template is None:
        header_template = default_header(vol)
    elif header_template.extents != vol.extents:
        if not regenerate:
            raise ExtentMismatch(
                f"volume extents {vol.extents} != template dim {header_template.extents} "
                "(pass regenerate=True to rebuild the template)"
            )

    slope, inter = header_template.scl_slope, header_template.scl_inter
    if slope == 0.0:
        slope, inter = 1.0, 0.0
    code = header_template.datatype_code
    dt_char, _ = DATATYPES[code]
    data = vol.data
    if code == 64 and slope == 1.0 and inter == 0.0:
        raw = data
    elif code in (16, 64):
        raw = ((data - inter) / slope).astype(dt_char)
    else:
        scaled = np.rint((data - inter) / slope)
        info = np.iinfo(dt_char)
        raw = np.clip(scaled, info.min, info.max).astype(dt_char)

    header = replace(
        header_template,
        sizeof_hdr=HEADER_SIZE,
        dim=(3, *vol.extents, 1, 1, 1, 1),
        pixdim=(1.0, *vol.spacing, 0.0, 0.0, 0.0, 0.0),
        vox_offset=352.0,
        scl_slope=slope,
        scl_inter=inter,
        sform_code=max(1, header_template.sform_code),
        srow_x=tuple(vol.affine[0]),
        srow_y=tuple(vol.affine[1]),
        srow_z=tuple(vol.affine[2]),
        magic=MAGIC_SINGLE,
        endian="<",
    )
    payload = _pack_header(header) + b"\x00\x00\x00\x00" + np.ascontiguousarray(
        raw.astype(np.dtype("<" + dt_char), copy=False).reshape(-1, order="F")
    ).tobytes()

    try:
        if str(path).endswith(".gz"):
            # filename and mtime pinned so identical volumes produce identical bytes
            with open(path, "wb") as f:
                with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                    gz.write(payload)
        else:
            with open(path, "wb") as f:
                f.write(payload)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_mask(mask: Mask3D, path) -> None:
    """Write a binary mask as uint8 NIfTI on the mask's grid."""
    vol = Volume3D(mask.data.astype(np.float64), mask.spacing, mask.affine)
    write_volume(vol, path, header_template=default_header(vol, datatype_code=2))


def read_mask(path) -> Mask3D:
    """Read a NIfTI file as a binary mask (nonzero = foreground)."""
    vol, _ = read_volume(path)
    return Mask3D(vol.data != 0, vol.spacing, vol.affine)
