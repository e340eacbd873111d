async def fetch(session, url):
    try:
        async with session.get(url) as resp:
            return await resp.text()
    except (ValueError, KeyError) as exc:
        raise RuntimeError("bad") from exc
    finally:
        pass


def gen():
    global counter
    x = yield
    yield from range(3)
    assert x is not None, "x"
    del x
    while True:
        break
