# Tests package for cavityantenna
