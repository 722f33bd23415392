# cavityantenna lib package
