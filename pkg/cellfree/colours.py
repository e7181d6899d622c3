# LCARS colour scheme, reused for result figures
BLACK = 0, 0, 0
WHITE = 255, 255, 255

ORANGE = 255, 153, 0
PURPLE = 204, 153, 204
GREY_BLUE = 153, 153, 204
RED_BROWN = 204, 102, 102
BEIGE = 255, 204, 153
BLUE = 153, 153, 255
PEACH = 255, 153, 102
PINK = 204, 102, 153

METHOD_COLOURS = {
    'centralized': BLUE,
    'admm': ORANGE,
    'conjugate': RED_BROWN,
    'relaxed': PURPLE,
}

TARGET_COLOUR = PINK


def mpl(rgb):
    """0-255 RGB tuple -> matplotlib 0-1 tuple"""
    return tuple(c / 255.0 for c in rgb)


def for_method(name):
    return mpl(METHOD_COLOURS.get(name, GREY_BLUE))
