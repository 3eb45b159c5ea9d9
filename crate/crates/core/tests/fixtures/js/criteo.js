var crtg_nid="1822";
var crtg_cookiename="co_au";
var crtg_varname="crtg_content";
function crtg_getCookie(c_name){
 var i,x,y,ARRCookies=document.cookie.split(";");
 for(i=0;i<ARRCookies.length;i++){
 x=ARRCookies[i].substr(0,ARRCookies[i]
          .indexOf("="));
 y=ARRCookies[i].substr(ARRCookies[i]
          .indexOf("=")+1);
 x=x.replace(/^\s+|\s+$/g,"");
 if(x==c_name){
	return unescape(y);
	}}
 return "";
}
