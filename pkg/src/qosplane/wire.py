"""Byte-exact construction and dissection of the 5G user-plane stack.

The stack is Ethernet II (optionally one 802.1Q tag), outer IPv4/UDP,
GTPv1-U on destination port 2152, then inner IPv4/UDP and payload.
Only the mandatory 8-byte GTP-U header is supported; frames carrying the
extension/sequence/N-PDU flags are rejected.  IPv4 and UDP checksums are
filled in on build and ignored on parse.
"""

import ipaddress
import struct
from dataclasses import dataclass

GTPU_PORT = 2152
GTPU_MSG_GPDU = 0xFF

ETH_HDR = 14
VLAN_TAG = 4
IPV4_HDR = 20
UDP_HDR = 8
GTPU_HDR = 8
INNER_STACK = IPV4_HDR + UDP_HDR

# Total bytes of headers around the payload, without a VLAN tag.
MIN_FRAME_BYTES = ETH_HDR + IPV4_HDR + UDP_HDR + GTPU_HDR + INNER_STACK


class WireError(Exception):
    """Base class for frame build/parse failures."""


class Truncated(WireError):
    """Fewer bytes than the declared header stack requires."""


class NotGtpu(WireError):
    """The frame is not GTP-U over IPv4/UDP (wrong port, type, or shape)."""


class UnsupportedVersion(WireError):
    """GTP version is not 1, or optional GTP-U header flags are present."""


class FrameTooShort(WireError):
    """Requested frame size cannot hold the header stack."""


@dataclass(frozen=True)
class EthInfo:
    src: str
    dst: str
    vlan_id: int | None = None


@dataclass(frozen=True)
class Ipv4Info:
    src: str
    dst: str
    total_length: int


@dataclass(frozen=True)
class UdpInfo:
    src_port: int
    dst_port: int


@dataclass(frozen=True)
class GtpuInfo:
    version: int
    msg_type: int
    length: int
    teid: int


@dataclass(frozen=True)
class ParsedHeaders:
    """Every header field of a dissected user-plane frame."""

    outer_eth: EthInfo
    outer_ipv4: Ipv4Info
    outer_udp: UdpInfo
    gtpu: GtpuInfo
    inner_ipv4: Ipv4Info
    inner_udp: UdpInfo
    payload_len: int


@dataclass(frozen=True)
class FrameSpec:
    """Inputs for :func:`build_frame`; addresses default to lab values."""

    teid: int
    inner_src_port: int
    inner_dst_port: int = 9000
    payload_len: int = 0
    eth_src: str = "02:00:00:00:00:01"
    eth_dst: str = "02:00:00:00:00:02"
    vlan_id: int | None = None
    outer_src_ip: str = "10.0.0.1"
    outer_dst_ip: str = "10.0.0.2"
    outer_src_port: int = GTPU_PORT
    inner_src_ip: str = "192.168.0.1"
    inner_dst_ip: str = "192.168.0.2"


def _mac_bytes(mac: str) -> bytes:
    parts = mac.split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address: {mac!r}")
    return bytes(int(p, 16) for p in parts)


def _mac_str(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def _ip_bytes(ip: str) -> bytes:
    return ipaddress.IPv4Address(ip).packed


def _ip_str(raw: bytes) -> str:
    return str(ipaddress.IPv4Address(raw))


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _ipv4_header(src: bytes, dst: bytes, total_length: int) -> bytes:
    hdr = struct.pack(
        "!BBHHHBBH4s4s",
        0x45, 0, total_length, 0, 0, 64, 17, 0, src, dst,
    )
    csum = _checksum(hdr)
    return hdr[:10] + struct.pack("!H", csum) + hdr[12:]


def _udp_header(src_ip: bytes, dst_ip: bytes, sport: int, dport: int,
                payload: bytes) -> bytes:
    length = UDP_HDR + len(payload)
    pseudo = src_ip + dst_ip + struct.pack("!BBH", 0, 17, length)
    hdr = struct.pack("!HHHH", sport, dport, length, 0)
    csum = _checksum(pseudo + hdr + payload)
    if csum == 0:
        csum = 0xFFFF
    return struct.pack("!HHHH", sport, dport, length, csum)


def build_frame(spec: FrameSpec) -> bytes:
    """Emit the full frame for ``spec``; parses back to the same fields."""
    if spec.payload_len < 0:
        raise FrameTooShort("payload_len must be nonnegative")
    if not 0 <= spec.teid <= 0xFFFFFFFF:
        raise ValueError(f"teid {spec.teid} outside uint32 range")
    payload = bytes((i * 7 + 1) & 0xFF for i in range(spec.payload_len))

    inner_udp = _udp_header(
        _ip_bytes(spec.inner_src_ip), _ip_bytes(spec.inner_dst_ip),
        spec.inner_src_port, spec.inner_dst_port, payload,
    )
    inner_ip = _ipv4_header(
        _ip_bytes(spec.inner_src_ip), _ip_bytes(spec.inner_dst_ip),
        INNER_STACK + spec.payload_len,
    )
    inner = inner_ip + inner_udp + payload

    # Flags 0x30: version 1, protocol type GTP, no optional fields.
    gtpu = struct.pack("!BBHI", 0x30, GTPU_MSG_GPDU, len(inner), spec.teid)

    outer_udp_payload = gtpu + inner
    outer_udp = _udp_header(
        _ip_bytes(spec.outer_src_ip), _ip_bytes(spec.outer_dst_ip),
        spec.outer_src_port, GTPU_PORT, outer_udp_payload,
    )
    outer_ip = _ipv4_header(
        _ip_bytes(spec.outer_src_ip), _ip_bytes(spec.outer_dst_ip),
        IPV4_HDR + UDP_HDR + len(outer_udp_payload),
    )

    eth = _mac_bytes(spec.eth_dst) + _mac_bytes(spec.eth_src)
    if spec.vlan_id is not None:
        if not 0 <= spec.vlan_id <= 4095:
            raise ValueError(f"vlan_id {spec.vlan_id} outside 12-bit range")
        eth += struct.pack("!HH", 0x8100, spec.vlan_id) + struct.pack("!H", 0x0800)
    else:
        eth += struct.pack("!H", 0x0800)

    return eth + outer_ip + outer_udp + outer_udp_payload


def frame_of_size(spec: FrameSpec, total_bytes: int) -> bytes:
    """Build a frame padded to exactly ``total_bytes`` on the wire."""
    overhead = MIN_FRAME_BYTES + (VLAN_TAG if spec.vlan_id is not None else 0)
    if total_bytes < overhead:
        raise FrameTooShort(
            f"{total_bytes} bytes cannot hold the {overhead}-byte header stack"
        )
    sized = FrameSpec(
        teid=spec.teid,
        inner_src_port=spec.inner_src_port,
        inner_dst_port=spec.inner_dst_port,
        payload_len=total_bytes - overhead,
        eth_src=spec.eth_src,
        eth_dst=spec.eth_dst,
        vlan_id=spec.vlan_id,
        outer_src_ip=spec.outer_src_ip,
        outer_dst_ip=spec.outer_dst_ip,
        outer_src_port=spec.outer_src_port,
        inner_src_ip=spec.inner_src_ip,
        inner_dst_ip=spec.inner_dst_ip,
    )
    return build_frame(sized)


def _need(data: bytes, offset: int, count: int, what: str) -> None:
    if len(data) < offset + count:
        raise Truncated(f"frame ends inside {what} "
                        f"(have {len(data)}, need {offset + count})")


def _parse_ipv4(data: bytes, offset: int, what: str) -> tuple[Ipv4Info, int]:
    _need(data, offset, IPV4_HDR, what)
    vihl = data[offset]
    if vihl >> 4 != 4:
        raise NotGtpu(f"{what}: IP version {vihl >> 4} is not 4")
    if vihl & 0x0F != 5:
        raise NotGtpu(f"{what}: IPv4 options are not supported")
    total_length = struct.unpack_from("!H", data, offset + 2)[0]
    proto = data[offset + 9]
    if proto != 17:
        raise NotGtpu(f"{what}: IP protocol {proto} is not UDP")
    src = _ip_str(data[offset + 12:offset + 16])
    dst = _ip_str(data[offset + 16:offset + 20])
    return Ipv4Info(src=src, dst=dst, total_length=total_length), offset + IPV4_HDR


def parse_frame(data: bytes) -> ParsedHeaders:
    """Dissect ``data`` into the full user-plane header stack.

    Raises:
        Truncated: the bytes end before the declared stack does, or a
            length field disagrees with the actual byte count.
        NotGtpu: the frame is not IPv4/UDP to the GTP-U port.
        UnsupportedVersion: not GTPv1, or optional header flags set.
    """
    _need(data, 0, ETH_HDR, "Ethernet header")
    eth_dst = _mac_str(data[0:6])
    eth_src = _mac_str(data[6:12])
    ethertype = struct.unpack_from("!H", data, 12)[0]
    offset = ETH_HDR
    vlan_id = None
    if ethertype == 0x8100:
        _need(data, offset, VLAN_TAG, "802.1Q tag")
        tci, inner_type = struct.unpack_from("!HH", data, offset)
        vlan_id = tci & 0x0FFF
        ethertype = inner_type
        offset += VLAN_TAG
    if ethertype != 0x0800:
        raise NotGtpu(f"ethertype 0x{ethertype:04x} is not IPv4")

    outer_ip, offset = _parse_ipv4(data, offset, "outer IPv4")
    _need(data, offset, UDP_HDR, "outer UDP")
    o_sport, o_dport, o_len, _ = struct.unpack_from("!HHHH", data, offset)
    offset += UDP_HDR
    if o_dport != GTPU_PORT:
        raise NotGtpu(f"outer UDP destination port {o_dport} is not {GTPU_PORT}")

    _need(data, offset, GTPU_HDR, "GTP-U header")
    flags, msg_type, g_len, teid = struct.unpack_from("!BBHI", data, offset)
    offset += GTPU_HDR
    version = flags >> 5
    if version != 1:
        raise UnsupportedVersion(f"GTP version {version} is not 1")
    if flags & 0x07:
        raise UnsupportedVersion(
            "GTP-U optional header flags (E/S/PN) are not supported"
        )

    remaining = len(data) - offset
    if remaining < g_len:
        raise Truncated(
            f"GTP-U declares {g_len} payload bytes but only {remaining} follow"
        )
    if remaining != g_len:
        raise Truncated(
            f"{remaining - g_len} trailing bytes beyond the GTP-U payload"
        )
    if g_len < INNER_STACK:
        raise Truncated(
            f"GTP-U payload of {g_len} bytes cannot hold inner IPv4/UDP"
        )

    inner_ip, offset = _parse_ipv4(data, offset, "inner IPv4")
    _need(data, offset, UDP_HDR, "inner UDP")
    i_sport, i_dport, i_len, _ = struct.unpack_from("!HHHH", data, offset)
    offset += UDP_HDR

    payload_len = len(data) - offset
    return ParsedHeaders(
        outer_eth=EthInfo(src=eth_src, dst=eth_dst, vlan_id=vlan_id),
        outer_ipv4=outer_ip,
        outer_udp=UdpInfo(src_port=o_sport, dst_port=o_dport),
        gtpu=GtpuInfo(version=version, msg_type=msg_type, length=g_len,
                      teid=teid),
        inner_ipv4=inner_ip,
        inner_udp=UdpInfo(src_port=i_sport, dst_port=i_dport),
        payload_len=payload_len,
    )
