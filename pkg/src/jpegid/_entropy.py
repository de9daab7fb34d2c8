"""Compiled inner loops for baseline Huffman entropy coding.

Status codes are returned rather than raised so the kernels stay nopython;
the callers in jpeg_parse / jpeg_sim translate them into exceptions.
"""

import numpy as np
from numba import njit

OK = 0
ERR_BAD_CODE = -1
ERR_TRUNCATED = -2
ERR_RESTART = -3
ERR_BAD_COEF = -4
ERR_OVERFLOW = -5

MESSAGES = {
    ERR_BAD_CODE: "Huffman code with no table entry",
    ERR_TRUNCATED: "truncated entropy-coded segment",
    ERR_RESTART: "missing or out-of-sequence restart marker",
    ERR_BAD_COEF: "coefficient index or magnitude category out of range",
    ERR_OVERFLOW: "coefficient magnitude exceeds baseline range",
}


@njit(cache=True, inline="always")
def _fill(data, pos, end, buf, cnt, phantom):
    # Stops at any marker; past it, zero bytes are fed and counted as phantom.
    while cnt <= 48:
        b = 0
        if pos < end:
            b = data[pos]
            if b == 0xFF:
                nb = data[pos + 1] if pos + 1 < end else 0xD9
                if nb == 0:
                    pos += 2
                else:
                    b = 0
                    phantom += 8
            else:
                pos += 1
        else:
            phantom += 8
        buf = (buf << 8) | b
        cnt += 8
    return pos, buf, cnt, phantom


@njit(cache=True, inline="always")
def _extend(v, s):
    if s == 0:
        return 0
    if v < (1 << (s - 1)):
        return v - (1 << s) + 1
    return v


@njit(cache=True)
def decode_scan(data, start, end, luts, comp_dc, comp_ac, comp_h, comp_v,
                comp_off, comp_stride, mcus_x, mcus_y, restart, zigzag, out):
    """Decode one scan into ``out`` (rows of 64 natural-order coefficients).

    Block (bx, by) of scan component c lands in row
    ``comp_off[c] + by * comp_stride[c] + bx``.  Returns (status, end_pos).
    """
    pos = start
    buf = np.int64(0)
    cnt = 0
    phantom = 0
    ncomp = comp_h.shape[0]
    pred = np.zeros(ncomp, dtype=np.int64)
    n_mcu = mcus_x * mcus_y
    rst = 0
    for mcu in range(n_mcu):
        if restart > 0 and mcu > 0 and mcu % restart == 0:
            if phantom > cnt:
                return ERR_TRUNCATED, pos
            if pos + 1 >= end or data[pos] != 0xFF or data[pos + 1] != 0xD0 + (rst & 7):
                return ERR_RESTART, pos
            pos += 2
            rst += 1
            buf = np.int64(0)
            cnt = 0
            phantom = 0
            for c in range(ncomp):
                pred[c] = 0
        my = mcu // mcus_x
        mx = mcu - my * mcus_x
        for c in range(ncomp):
            hc = comp_h[c]
            vc = comp_v[c]
            dct = comp_dc[c]
            act = comp_ac[c]
            for v in range(vc):
                for h in range(hc):
                    row = comp_off[c] + (my * vc + v) * comp_stride[c] + mx * hc + h
                    if cnt < 16:
                        pos, buf, cnt, phantom = _fill(data, pos, end, buf, cnt, phantom)
                    e = luts[dct, (buf >> (cnt - 16)) & 0xFFFF]
                    if e == 0:
                        return ERR_BAD_CODE, pos
                    cnt -= e >> 8
                    s = e & 0xFF
                    if s > 11:
                        return ERR_BAD_COEF, pos
                    diff = 0
                    if s > 0:
                        if cnt < s:
                            pos, buf, cnt, phantom = _fill(data, pos, end, buf, cnt, phantom)
                        diff = _extend((buf >> (cnt - s)) & ((1 << s) - 1), s)
                        cnt -= s
                    buf &= (np.int64(1) << cnt) - 1
                    pred[c] += diff
                    out[row, 0] = pred[c]
                    k = 1
                    while k < 64:
                        if cnt < 16:
                            pos, buf, cnt, phantom = _fill(data, pos, end, buf, cnt, phantom)
                        e = luts[act, (buf >> (cnt - 16)) & 0xFFFF]
                        if e == 0:
                            return ERR_BAD_CODE, pos
                        cnt -= e >> 8
                        rs = e & 0xFF
                        r = rs >> 4
                        s = rs & 15
                        if s == 0:
                            buf &= (np.int64(1) << cnt) - 1
                            if r == 15:
                                k += 16
                                continue
                            break
                        k += r
                        if k > 63:
                            return ERR_BAD_COEF, pos
                        if cnt < s:
                            pos, buf, cnt, phantom = _fill(data, pos, end, buf, cnt, phantom)
                        out[row, zigzag[k]] = _extend((buf >> (cnt - s)) & ((1 << s) - 1), s)
                        cnt -= s
                        buf &= (np.int64(1) << cnt) - 1
                        k += 1
        if phantom > cnt:
            return ERR_TRUNCATED, pos
    return OK, pos


@njit(cache=True, inline="always")
def _nbits(v):
    v = abs(v)
    n = 0
    while v:
        n += 1
        v >>= 1
    return n


@njit(cache=True, inline="always")
def _emit(out, p, buf, cnt, code, size):
    buf = (buf << size) | code
    cnt += size
    while cnt >= 8:
        byte = (buf >> (cnt - 8)) & 0xFF
        out[p] = byte
        p += 1
        if byte == 0xFF:
            out[p] = 0
            p += 1
        cnt -= 8
    buf &= (np.int64(1) << cnt) - 1
    return p, buf, cnt


@njit(cache=True)
def encode_scan(blocks, slot_comp, dc_codes, dc_sizes, ac_codes, ac_sizes,
                restart, zigzag, out):
    """Huffman-code ``blocks`` (MCU order, natural-order rows) into ``out``.

    ``slot_comp[j]`` is the component of the j-th block inside an MCU.
    Returns the number of bytes written, or a negative status.
    """
    per_mcu = slot_comp.shape[0]
    n_mcu = blocks.shape[0] // per_mcu
    pred = np.zeros(dc_codes.shape[0], dtype=np.int64)
    p = 0
    buf = np.int64(0)
    cnt = 0
    rst = 0
    for mcu in range(n_mcu):
        if restart > 0 and mcu > 0 and mcu % restart == 0:
            if cnt > 0:
                pad = 8 - cnt
                p, buf, cnt = _emit(out, p, buf, cnt, (1 << pad) - 1, pad)
            out[p] = 0xFF
            out[p + 1] = 0xD0 + (rst & 7)
            p += 2
            rst += 1
            for c in range(pred.shape[0]):
                pred[c] = 0
        for j in range(per_mcu):
            c = slot_comp[j]
            blk = blocks[mcu * per_mcu + j]
            diff = np.int64(blk[0]) - pred[c]
            pred[c] = blk[0]
            s = _nbits(diff)
            if s > 11:
                return ERR_OVERFLOW
            p, buf, cnt = _emit(out, p, buf, cnt, dc_codes[c, s], dc_sizes[c, s])
            if s > 0:
                bits = diff if diff > 0 else diff + (1 << s) - 1
                p, buf, cnt = _emit(out, p, buf, cnt, bits, s)
            run = 0
            for k in range(1, 64):
                val = np.int64(blk[zigzag[k]])
                if val == 0:
                    run += 1
                    continue
                while run > 15:
                    p, buf, cnt = _emit(out, p, buf, cnt, ac_codes[c, 0xF0], ac_sizes[c, 0xF0])
                    run -= 16
                s = _nbits(val)
                if s > 10:
                    return ERR_OVERFLOW
                sym = (run << 4) | s
                p, buf, cnt = _emit(out, p, buf, cnt, ac_codes[c, sym], ac_sizes[c, sym])
                bits = val if val > 0 else val + (1 << s) - 1
                p, buf, cnt = _emit(out, p, buf, cnt, bits, s)
                run = 0
            if run > 0:
                p, buf, cnt = _emit(out, p, buf, cnt, ac_codes[c, 0], ac_sizes[c, 0])
    if cnt > 0:
        pad = 8 - cnt
        p, buf, cnt = _emit(out, p, buf, cnt, (1 << pad) - 1, pad)
    return p
