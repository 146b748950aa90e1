"""Pure-Python renewal scan; reference for the compiled kernel in ``_scan.pyx``."""


def scan(gaps, services, out, n_done, n_target, t, cover, is_open):
    """Advance the busy-period scan over one block of arrivals.

    Arrival ``i`` comes ``gaps[i]`` after arrival ``i-1`` and needs
    ``services[i]``.  ``t`` is the current arrival time and ``cover`` the
    latest departure, both measured from the start of the open busy period.
    Completed lengths are written to ``out[n_done:]`` until ``n_target`` is
    reached.

    Returns ``(consumed, n_done, t, cover, is_open)``; ``consumed`` counts
    the arrivals belonging to completed or still-open busy periods read from
    this block.
    """
    g = gaps.tolist()
    s = services.tolist()
    done = []
    need = n_target - n_done
    consumed = len(g)
    for i in range(len(g)):
        if not is_open:
            cover = s[i]
            t = 0.0
            is_open = True
            continue
        t += g[i]
        if t < cover:
            end = t + s[i]
            if end > cover:
                cover = end
        else:
            done.append(cover)
            if len(done) == need:
                consumed = i
                break
            cover = s[i]
            t = 0.0
    if done:
        out[n_done:n_done + len(done)] = done
    return consumed, n_done + len(done), t, cover, is_open
